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

#include "seq2set/decoder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace seq2set {

using tape::Tape;
using tape::Tensor;
using tape::VarId;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void init_uniform(Tensor& t, Rng& rng) {
  double fan_in = static_cast<double>(t.cols() == 1 ? t.rows() : t.cols());
  double r = 1.0 / std::sqrt(std::max(1.0, fan_in));
  rng.fill_uniform(t.value, -r, r);
}

Eigen::MatrixXd fetch(const std::unordered_map<std::string, Eigen::MatrixXd>& m,
                      const std::string& name, Eigen::Index rows,
                      Eigen::Index cols) {
  auto it = m.find(name);
  if (it == m.end()) throw std::runtime_error("checkpoint lacks tensor " + name);
  if (it->second.rows() != rows || it->second.cols() != cols) {
    throw std::runtime_error("tensor " + name + " has unexpected shape " +
                             std::to_string(it->second.rows()) + "x" +
                             std::to_string(it->second.cols()));
  }
  return it->second;
}

}  // namespace

DecoderParameters::DecoderParameters(const DecoderDims& d, Rng& rng)
    : dims(d),
      ctx_w("dec.ctx_w", d.d_a, d.d_s),
      ctx_u("dec.ctx_u", d.d_a, d.d_h),
      ctx_v("dec.ctx_v", d.d_a, 1),
      prem_w("dec.prem_w", d.d_a, d.d_s),
      prem_u("dec.prem_u", d.d_a, d.d_s),
      prem_v("dec.prem_v", d.d_a, 1),
      out_w("dec.out_w", d.n_labels + 1, 2 * d.d_s),
      label_in_w("dec.label_in_w", d.d_e, d.d_e),
      label_embeddings("dec.label_embeddings", d.n_labels + 1, d.d_e),
      start_embedding("dec.start_embedding", d.d_e, 1),
      state_proj_w("dec.state_proj_w", d.d_s, d.d_h),
      state_proj_b("dec.state_proj_b", d.d_s, 1),
      lstm_wx("dec.lstm_wx", 4 * d.d_s, d.d_e),
      lstm_wh("dec.lstm_wh", 4 * d.d_s, d.d_s),
      lstm_b("dec.lstm_b", 4 * d.d_s, 1) {
  init_uniform(ctx_w, rng);
  init_uniform(ctx_u, rng);
  init_uniform(ctx_v, rng);
  init_uniform(prem_w, rng);
  init_uniform(prem_u, rng);
  init_uniform(prem_v, rng);
  init_uniform(out_w, rng);
  init_uniform(label_in_w, rng);
  init_uniform(label_embeddings, rng);
  init_uniform(start_embedding, rng);
  init_uniform(state_proj_w, rng);
  init_uniform(lstm_wx, rng);
  init_uniform(lstm_wh, rng);
  // projection and gate biases stay zero
}

DecoderParameters::DecoderParameters(
    const DecoderDims& d,
    const std::unordered_map<std::string, Eigen::MatrixXd>& tensors)
    : dims(d),
      ctx_w("dec.ctx_w", d.d_a, d.d_s),
      ctx_u("dec.ctx_u", d.d_a, d.d_h),
      ctx_v("dec.ctx_v", d.d_a, 1),
      prem_w("dec.prem_w", d.d_a, d.d_s),
      prem_u("dec.prem_u", d.d_a, d.d_s),
      prem_v("dec.prem_v", d.d_a, 1),
      out_w("dec.out_w", d.n_labels + 1, 2 * d.d_s),
      label_in_w("dec.label_in_w", d.d_e, d.d_e),
      label_embeddings("dec.label_embeddings", d.n_labels + 1, d.d_e),
      start_embedding("dec.start_embedding", d.d_e, 1),
      state_proj_w("dec.state_proj_w", d.d_s, d.d_h),
      state_proj_b("dec.state_proj_b", d.d_s, 1),
      lstm_wx("dec.lstm_wx", 4 * d.d_s, d.d_e),
      lstm_wh("dec.lstm_wh", 4 * d.d_s, d.d_s),
      lstm_b("dec.lstm_b", 4 * d.d_s, 1) {
  ctx_w.value = fetch(tensors, "dec.ctx_w", d.d_a, d.d_s);
  ctx_u.value = fetch(tensors, "dec.ctx_u", d.d_a, d.d_h);
  ctx_v.value = fetch(tensors, "dec.ctx_v", d.d_a, 1);
  prem_w.value = fetch(tensors, "dec.prem_w", d.d_a, d.d_s);
  prem_u.value = fetch(tensors, "dec.prem_u", d.d_a, d.d_s);
  prem_v.value = fetch(tensors, "dec.prem_v", d.d_a, 1);
  out_w.value = fetch(tensors, "dec.out_w", d.n_labels + 1, 2 * d.d_s);
  label_in_w.value = fetch(tensors, "dec.label_in_w", d.d_e, d.d_e);
  label_embeddings.value =
      fetch(tensors, "dec.label_embeddings", d.n_labels + 1, d.d_e);
  start_embedding.value = fetch(tensors, "dec.start_embedding", d.d_e, 1);
  state_proj_w.value = fetch(tensors, "dec.state_proj_w", d.d_s, d.d_h);
  state_proj_b.value = fetch(tensors, "dec.state_proj_b", d.d_s, 1);
  lstm_wx.value = fetch(tensors, "dec.lstm_wx", 4 * d.d_s, d.d_e);
  lstm_wh.value = fetch(tensors, "dec.lstm_wh", 4 * d.d_s, d.d_s);
  lstm_b.value = fetch(tensors, "dec.lstm_b", 4 * d.d_s, 1);
}

void DecoderParameters::collect_parameters(std::vector<Tensor*>& out) {
  out.push_back(&ctx_w);
  out.push_back(&ctx_u);
  out.push_back(&ctx_v);
  out.push_back(&prem_w);
  out.push_back(&prem_u);
  out.push_back(&prem_v);
  out.push_back(&out_w);
  out.push_back(&label_in_w);
  out.push_back(&label_embeddings);
  out.push_back(&start_embedding);
  out.push_back(&state_proj_w);
  out.push_back(&state_proj_b);
  out.push_back(&lstm_wx);
  out.push_back(&lstm_wh);
  out.push_back(&lstm_b);
}

std::vector<bool> DecodeState::masked_flags() const {
  std::vector<bool> flags(static_cast<std::size_t>(mask.size()), false);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    flags[static_cast<std::size_t>(i)] = std::isinf(mask(i));
  }
  return flags;
}

AttentionVars additive_attention_on(Tape& t, Tensor& w, Tensor& u, Tensor& v,
                                    VarId query,
                                    const std::vector<VarId>& items,
                                    const std::vector<VarId>* key_cache) {
  if (items.empty()) {
    throw std::invalid_argument("attention over an empty item set");
  }
  VarId q = t.matvec(w, query);
  std::vector<VarId> scores;
  scores.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    VarId key = key_cache ? (*key_cache)[i] : t.matvec(u, items[i]);
    scores.push_back(t.dot(t.parameter(v), t.tanh(t.add(q, key))));
  }
  AttentionVars out;
  out.weights = t.softmax(t.stack(scores));
  out.pooled = t.weighted_sum(items, out.weights);
  return out;
}

VarId initial_state_on(Tape& t, DecoderParameters& params, VarId g_var) {
  return t.affine(params.state_proj_w, params.state_proj_b, g_var);
}

namespace {

// Standard LSTM cell with gates stacked [input; forget; candidate; output].
std::pair<VarId, VarId> lstm_cell_on(Tape& t, DecoderParameters& p, VarId x,
                                     VarId h_prev, VarId c_prev) {
  const int d_s = p.dims.d_s;
  VarId gates = t.add(t.add(t.matvec(p.lstm_wx, x), t.matvec(p.lstm_wh, h_prev)),
                      t.parameter(p.lstm_b));
  VarId i_g = t.sigmoid(t.slice(gates, 0, d_s));
  VarId f_g = t.sigmoid(t.slice(gates, d_s, d_s));
  VarId g_g = t.tanh(t.slice(gates, 2 * d_s, d_s));
  VarId o_g = t.sigmoid(t.slice(gates, 3 * d_s, d_s));
  VarId c_new = t.add(t.cmul(f_g, c_prev), t.cmul(i_g, g_g));
  VarId h_new = t.cmul(o_g, t.tanh(c_new));
  return {h_new, c_new};
}

VarId input_embedding_on(Tape& t, DecoderParameters& p, int input_id) {
  if (input_id == kStartInput) {
    return t.parameter(p.start_embedding);
  }
  if (input_id < 0 || input_id > p.dims.n_labels) {
    throw std::invalid_argument("decoder input id out of range: " +
                                std::to_string(input_id));
  }
  return t.parameter_row(p.label_embeddings, input_id);
}

}  // namespace

StepVars decoder_step_on(Tape& t, DecoderParameters& params, VarId prev_hidden,
                         VarId prev_cell, const std::vector<VarId>& priors,
                         int input_id, const std::vector<VarId>& h_vars,
                         VarId g_var, const std::vector<VarId>* ctx_key_cache,
                         const Eigen::VectorXd* dropout_mask) {
  if (h_vars.empty()) {
    throw std::invalid_argument("decoder step without encoder states");
  }
  VarId x = t.matvec(params.label_in_w, input_embedding_on(t, params, input_id));
  auto [s_new, c_new] = lstm_cell_on(t, params, x, prev_hidden, prev_cell);

  AttentionVars ctx = additive_attention_on(t, params.ctx_w, params.ctx_u,
                                            params.ctx_v, s_new, h_vars,
                                            ctx_key_cache);
  AttentionVars prem = additive_attention_on(t, params.prem_w, params.prem_u,
                                             params.prem_v, s_new, priors,
                                             nullptr);

  VarId context_block = t.affine(params.state_proj_w, params.state_proj_b,
                                 t.add(ctx.pooled, g_var));
  VarId m = t.concat(context_block, t.add(prem.pooled, s_new));
  if (dropout_mask) m = t.cmul_fixed(m, *dropout_mask);
  VarId logits = t.matvec(params.out_w, m);

  StepVars out;
  out.hidden = s_new;
  out.cell = c_new;
  out.logits = logits;
  out.ctx_weights = ctx.weights;
  out.prem_weights = prem.weights;
  return out;
}

std::vector<TeacherForcedStep> run_teacher_forced(
    Tape& t, DecoderParameters& params, const std::vector<VarId>& h_vars,
    VarId g_var, const std::vector<int>& inputs,
    const std::vector<Eigen::VectorXd>* dropout_masks) {
  if (inputs.empty() || inputs[0] != kStartInput) {
    throw std::invalid_argument("teacher forcing must start with kStartInput");
  }
  const std::size_t width = static_cast<std::size_t>(params.dims.n_labels + 1);
  std::vector<VarId> priors = {initial_state_on(t, params, g_var)};
  VarId cell = t.constant(Eigen::VectorXd::Zero(params.dims.d_s));

  std::vector<VarId> ctx_keys;
  ctx_keys.reserve(h_vars.size());
  for (VarId h : h_vars) ctx_keys.push_back(t.matvec(params.ctx_u, h));

  std::vector<TeacherForcedStep> steps;
  std::vector<bool> masked(width, false);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (k > 0) {
      int fed = inputs[k];
      if (fed < 0 || fed >= params.dims.n_labels) {
        throw std::invalid_argument("teacher-forced input out of label range");
      }
      masked[static_cast<std::size_t>(fed)] = true;
    }
    const Eigen::VectorXd* drop =
        dropout_masks ? &(*dropout_masks)[k] : nullptr;
    StepVars sv = decoder_step_on(t, params, priors.back(), cell, priors,
                                  inputs[k], h_vars, g_var, &ctx_keys, drop);
    cell = sv.cell;
    priors.push_back(sv.hidden);
    steps.push_back(TeacherForcedStep{sv.hidden, sv.logits, masked});
  }
  return steps;
}

DecodeState init_state(const EncodedInstance& encoded,
                       const DecoderParameters& params) {
  if (encoded.sentence_embedding.size() != params.dims.d_h) {
    throw std::invalid_argument("sentence embedding width != d_h");
  }
  DecodeState st;
  st.t = 0;
  st.hidden = params.state_proj_w.value * encoded.sentence_embedding +
              params.state_proj_b.value.col(0);
  st.cell = Eigen::VectorXd::Zero(params.dims.d_s);
  st.priors = {st.hidden};
  st.mask = Eigen::VectorXd::Ones(params.dims.n_labels + 1);
  return st;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> contextual_attention(
    const Eigen::VectorXd& s_t, const Eigen::MatrixXd& h,
    DecoderParameters& params) {
  if (h.rows() == 0) {
    throw std::invalid_argument("contextual attention over empty H");
  }
  Tape t;
  std::vector<VarId> items;
  items.reserve(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    items.push_back(t.constant(h.row(i).transpose()));
  }
  AttentionVars att =
      additive_attention_on(t, params.ctx_w, params.ctx_u, params.ctx_v,
                            t.constant(s_t), items, nullptr);
  return {t.value(att.weights), t.value(att.pooled)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> premise_attention(
    const Eigen::VectorXd& s_t, const std::vector<Eigen::VectorXd>& priors,
    DecoderParameters& params) {
  if (priors.empty()) {
    throw std::invalid_argument("premise attention over empty priors");
  }
  Tape t;
  std::vector<VarId> items;
  items.reserve(priors.size());
  for (const Eigen::VectorXd& s : priors) items.push_back(t.constant(s));
  AttentionVars att =
      additive_attention_on(t, params.prem_w, params.prem_u, params.prem_v,
                            t.constant(s_t), items, nullptr);
  return {t.value(att.weights), t.value(att.pooled)};
}

StepResult step(const DecodeState& state, int prev_label_id,
                const EncodedInstance& encoded, DecoderParameters& params) {
  if ((state.t == 0) != (prev_label_id == kStartInput)) {
    throw std::invalid_argument(
        "kStartInput is fed exactly at the first step");
  }
  Tape t;
  std::vector<VarId> h_vars;
  h_vars.reserve(static_cast<std::size_t>(encoded.hidden_states.rows()));
  for (Eigen::Index i = 0; i < encoded.hidden_states.rows(); ++i) {
    h_vars.push_back(t.constant(encoded.hidden_states.row(i).transpose()));
  }
  VarId g_var = t.constant(encoded.sentence_embedding);
  std::vector<VarId> priors;
  priors.reserve(state.priors.size());
  for (const Eigen::VectorXd& s : state.priors) priors.push_back(t.constant(s));

  StepVars sv = decoder_step_on(t, params, t.constant(state.hidden),
                                t.constant(state.cell), priors, prev_label_id,
                                h_vars, g_var, nullptr, nullptr);

  StepResult out;
  Eigen::VectorXd logits = t.value(sv.logits);
  out.masked_logits = logits + state.mask;  // I_t: +1 unmasked, -inf emitted
  Tape prob_tape;
  out.distribution = prob_tape.value(prob_tape.masked_softmax(
      prob_tape.constant(logits), state.masked_flags()));

  out.next = state;
  out.next.t = state.t + 1;
  out.next.hidden = t.value(sv.hidden);
  out.next.cell = t.value(sv.cell);
  out.next.priors.push_back(out.next.hidden);
  return out;
}

DecodeState record_emission(const DecodeState& state, int label_id) {
  if (label_id < 0 || label_id >= state.mask.size() - 1) {
    throw std::invalid_argument("record_emission: not a label id: " +
                                std::to_string(label_id));
  }
  if (std::isinf(state.mask(label_id))) {
    throw std::invalid_argument("record_emission: label " +
                                std::to_string(label_id) + " already emitted");
  }
  DecodeState next = state;
  next.emitted.push_back(label_id);
  next.mask(label_id) = kNegInf;
  return next;
}

std::vector<int> decode_greedy(const EncodedInstance& encoded,
                               DecoderParameters& params, int max_steps,
                               DecodeTrace* trace) {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  const int eos = params.eos_id();
  DecodeState state = init_state(encoded, params);
  int prev = kStartInput;
  for (int k = 0; k < max_steps; ++k) {
    StepResult res = step(state, prev, encoded, params);
    if (trace) {
      trace->distributions.push_back(res.distribution);
      trace->masked_logits.push_back(res.masked_logits);
      trace->hiddens.push_back(res.next.hidden);
    }
    // Argmax with ties toward the lowest id; masked entries are exactly 0.
    int best = 0;
    for (int j = 1; j <= params.dims.n_labels; ++j) {
      if (res.distribution(j) > res.distribution(best)) best = j;
    }
    if (best == eos) return res.next.emitted;
    state = record_emission(res.next, best);
    prev = best;
  }
  return state.emitted;
}

}  // namespace seq2set
