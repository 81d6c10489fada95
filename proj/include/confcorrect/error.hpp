// Copyright 2026 The confcorrect Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONFCORRECT_ERROR_HPP
#define CONFCORRECT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace confcorrect {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data failed validation (manifest records, probability vectors,
/// duplicate ids, orphaned references).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is outside its legal range (alpha, thresholds, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Prompt template missing, malformed, or missing data it needs.
class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Corrector backend failure: network, HTTP status, body, or replay miss.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Filesystem problems (unreadable input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace confcorrect

#endif  // CONFCORRECT_ERROR_HPP
