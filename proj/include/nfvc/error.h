// Copyright (c) 2026 The NFVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NFVC_ERROR_H_
#define NFVC_ERROR_H_

#include <stdexcept>
#include <string>

namespace nfvc {

// Error categories map one-to-one onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration key or value (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, mismatched or unreadable data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Operands with incompatible shapes. A flavour of DataError.
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf or an otherwise unusable numeric state (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

int ExitCodeFor(const std::exception& e);

}  // namespace nfvc

#endif  // NFVC_ERROR_H_
