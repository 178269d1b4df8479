/*
 * Copyright 2026 The fermi Authors.
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

#ifndef FERMI_ERRORS_H_
#define FERMI_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fermi {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, schema violations, out-of-range indices,
// missing sensitive classes. Maps to CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// A numerical assumption of the method does not hold at the current point,
// e.g. a predicted-class marginal collapsed to zero. Maps to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fermi

#endif  // FERMI_ERRORS_H_
