/*
 * Copyright 2026 The crsllm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "crsllm/crs/backend.hpp"

#include "crsllm/util/error.hpp"

namespace crsllm::crs {

double Seq2SeqBackend::accumulate_seq2seq_gradient(const std::string&, const std::string&, const std::string&,
                                                   double) {
  throw PreconditionError("backend '" + kind() + "' is not trainable");
}

void Seq2SeqBackend::backprop_encoding(const std::string&, std::span<const double>) {
  throw PreconditionError("backend '" + kind() + "' is not trainable");
}

}  // namespace crsllm::crs
