// Copyright 2026 The artvq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace artvq {

// Every failure raised by the library derives from Error so callers can catch
// one type at the top level; the subclasses mirror the failure categories
// reported by the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class TrainingError : public Error { public: using Error::Error; };
class IngestionError : public Error { public: using Error::Error; };
class ConfigurationError : public Error { public: using Error::Error; };
class EvaluationError : public Error { public: using Error::Error; };
class ModalityError : public Error { public: using Error::Error; };
class AlignmentError : public Error { public: using Error::Error; };
class FitError : public Error { public: using Error::Error; };

}  // namespace artvq
