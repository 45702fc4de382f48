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

#ifndef SEQ2SET_STOPWORDS_H_
#define SEQ2SET_STOPWORDS_H_

#include <string>

namespace seq2set {

// Fixed English stop-word list, version 1. Lookup lowercases first.
bool is_stop_word(const std::string& word);

// ASCII lowercase.
std::string to_lower(const std::string& word);

}  // namespace seq2set

#endif  // SEQ2SET_STOPWORDS_H_
