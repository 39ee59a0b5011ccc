// Copyright 2026 The lmcrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMCRL_ERRORS_HPP_
#define LMCRL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace lmcrl {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LMCRL_DEFINE_ERROR(Name)              \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(#Name ": " + what) {}         \
  }

LMCRL_DEFINE_ERROR(NonPositiveDefinite);
LMCRL_DEFINE_ERROR(NoConvergence);
LMCRL_DEFINE_ERROR(DimensionMismatch);
LMCRL_DEFINE_ERROR(InvalidSize);
LMCRL_DEFINE_ERROR(InvalidModel);
LMCRL_DEFINE_ERROR(EpisodeOver);
LMCRL_DEFINE_ERROR(StaleTargets);
LMCRL_DEFINE_ERROR(StepSizeTooLarge);
LMCRL_DEFINE_ERROR(NonFiniteGradient);
LMCRL_DEFINE_ERROR(BufferTooSmall);
LMCRL_DEFINE_ERROR(ConfigError);
LMCRL_DEFINE_ERROR(InfeasibleExact);
LMCRL_DEFINE_ERROR(IoError);

#undef LMCRL_DEFINE_ERROR

}  // namespace lmcrl

#endif  // LMCRL_ERRORS_HPP_
