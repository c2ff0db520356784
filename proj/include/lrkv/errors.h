// Copyright 2026 The LRKV Lab Authors.
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

#ifndef LRKV_ERRORS_H_
#define LRKV_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lrkv {

// Base of every error thrown by the library. Subclasses only name the
// category; the message carries the offending field or value.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// Raised for a zero-norm bilinear form when a normalized Gram is requested.
class DegenerateHeadError : public Error {
 public:
  DegenerateHeadError(int head, const std::string& what)
      : Error(what), head_(head) {}
  int head() const { return head_; }

 private:
  int head_;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrkv

#endif  // LRKV_ERRORS_H_
