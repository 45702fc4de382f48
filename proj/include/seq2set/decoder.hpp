/* Copyright 2026 The seq2set Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEQ2SET_DECODER_H_
#define SEQ2SET_DECODER_H_

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <vector>

#include "seq2set/encoder.hpp"
#include "seq2set/rng.hpp"
#include "seq2set/tape.hpp"

namespace seq2set {

// Pseudo label id fed at the first decoding step.
inline constexpr int kStartInput = -1;

struct DecoderDims {
  int n_labels;  // |L|; logits have n_labels + 1 entries, EOS last
  int d_h;       // encoder hidden width
  int d_s;       // decoder hidden width
  int d_a;       // attention width
  int d_e;       // label embedding width
};

// All trainable decoder tensors. The affine state projection
// (state_proj_w/b) reconciles d_h with d_s: it maps both g (for s_0) and
// c_t + g (for the first block of m_t) into d_s, so m_t always has
// width 2*d_s.
struct DecoderParameters {
  DecoderDims dims;
  tape::Tensor ctx_w, ctx_u, ctx_v;     // contextual attention
  tape::Tensor prem_w, prem_u, prem_v;  // premise attention
  tape::Tensor out_w;                   // (|L|+1) x 2*d_s
  tape::Tensor label_in_w;              // d_e x d_e label-input projection
  tape::Tensor label_embeddings;        // (|L|+1) x d_e, EOS in the last row
  tape::Tensor start_embedding;         // d_e
  tape::Tensor state_proj_w;            // d_s x d_h
  tape::Tensor state_proj_b;            // d_s
  tape::Tensor lstm_wx, lstm_wh, lstm_b;  // gates stacked i,f,g,o

  DecoderParameters(const DecoderDims& dims, Rng& rng);
  DecoderParameters(
      const DecoderDims& dims,
      const std::unordered_map<std::string, Eigen::MatrixXd>& tensors);
  void collect_parameters(std::vector<tape::Tensor*>& out);
  int eos_id() const { return dims.n_labels; }
};

// Value snapshot of an in-flight decode. Steps produce new states; the
// duplicate mask has entry 1 when a label may still be emitted and -inf
// once it has been, EOS never masked.
struct DecodeState {
  int t = 0;
  Eigen::VectorXd hidden;  // s_t
  Eigen::VectorXd cell;    // recurrent cell state (starts at zero)
  std::vector<Eigen::VectorXd> priors;  // s_0..s_t
  std::vector<int> emitted;
  Eigen::VectorXd mask;  // (|L|+1)-vector over {1, -inf}

  std::vector<bool> masked_flags() const;
};

DecodeState init_state(const EncodedInstance& encoded,
                       const DecoderParameters& params);

// (attention weights over H rows, pooled context vector).
std::pair<Eigen::VectorXd, Eigen::VectorXd> contextual_attention(
    const Eigen::VectorXd& s_t, const Eigen::MatrixXd& h,
    DecoderParameters& params);

// (attention weights over prior decoder states, pooled premise vector).
std::pair<Eigen::VectorXd, Eigen::VectorXd> premise_attention(
    const Eigen::VectorXd& s_t, const std::vector<Eigen::VectorXd>& priors,
    DecoderParameters& params);

struct StepResult {
  Eigen::VectorXd masked_logits;  // o_t + I_t (-inf at emitted labels)
  Eigen::VectorXd distribution;   // y_t; masked entries are exactly 0
  DecodeState next;
};

// One decoder step: advances the recurrence on the previous label
// (kStartInput only at t=0), attends over context and prior states, and
// produces the (|L|+1)-way distribution. The mask is left untouched;
// emission is recorded separately.
StepResult step(const DecodeState& state, int prev_label_id,
                const EncodedInstance& encoded, DecoderParameters& params);

// Marks label_id as emitted (not EOS, not already emitted).
DecodeState record_emission(const DecodeState& state, int label_id);

struct DecodeTrace {
  std::vector<Eigen::VectorXd> distributions;   // y_t per executed step
  std::vector<Eigen::VectorXd> masked_logits;
  std::vector<Eigen::VectorXd> hiddens;         // s_t per executed step
};

// Greedy argmax decoding until EOS or max_steps; ties break toward the
// lowest label id. Returns emitted label ids in generation order.
std::vector<int> decode_greedy(const EncodedInstance& encoded,
                               DecoderParameters& params, int max_steps,
                               DecodeTrace* trace = nullptr);

// --- Tape-level building blocks (shared by the value API and training) ---

struct AttentionVars {
  tape::VarId weights;  // softmax over items
  tape::VarId pooled;   // sum_i weights[i] * items[i]
};

// e_i = v^T tanh(w*query + u*items[i]); key_cache optionally holds
// precomputed u*items[i] nodes.
AttentionVars additive_attention_on(tape::Tape& t, tape::Tensor& w,
                                    tape::Tensor& u, tape::Tensor& v,
                                    tape::VarId query,
                                    const std::vector<tape::VarId>& items,
                                    const std::vector<tape::VarId>* key_cache);

struct StepVars {
  tape::VarId hidden;
  tape::VarId cell;
  tape::VarId logits;  // o_t, unmasked
  tape::VarId ctx_weights;
  tape::VarId prem_weights;
};

StepVars decoder_step_on(tape::Tape& t, DecoderParameters& params,
                         tape::VarId prev_hidden, tape::VarId prev_cell,
                         const std::vector<tape::VarId>& priors,
                         int input_id, const std::vector<tape::VarId>& h_vars,
                         tape::VarId g_var,
                         const std::vector<tape::VarId>* ctx_key_cache,
                         const Eigen::VectorXd* dropout_mask);

// s_0 = state_proj_w * g + state_proj_b recorded on the tape.
tape::VarId initial_state_on(tape::Tape& t, DecoderParameters& params,
                             tape::VarId g_var);

struct TeacherForcedStep {
  tape::VarId hidden;
  tape::VarId logits;        // unmasked o_t
  std::vector<bool> masked;  // duplicate mask implied by the fed history
};

// Runs |inputs| steps with the given inputs (inputs[0] must be
// kStartInput); step k's mask covers inputs[1..k].
std::vector<TeacherForcedStep> run_teacher_forced(
    tape::Tape& t, DecoderParameters& params,
    const std::vector<tape::VarId>& h_vars, tape::VarId g_var,
    const std::vector<int>& inputs,
    const std::vector<Eigen::VectorXd>* dropout_masks);

}  // namespace seq2set

#endif  // SEQ2SET_DECODER_H_
