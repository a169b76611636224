// Copyright 2026 The echo-gfa Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace echogfa {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidDimension : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidClass : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidRate : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidGrid : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Operands live on different grids or have incompatible matrix shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The implicit trapezoid step of the Volterra solver is not solvable.
class StepsizeError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The requested method is infeasible for the problem size.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace echogfa
