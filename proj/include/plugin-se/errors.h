// plugin-se/errors.h

// Copyright 2026  plugin-se contributors
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

#ifndef PLUGIN_SE_ERRORS_H_
#define PLUGIN_SE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace plugin_se {

/// Bad shapes, out-of-range values, zero-energy signals, unknown names.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string &what)
      : std::invalid_argument(what) {}
};

/// Non-finite gradients or losses encountered while optimizing.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string &what) : std::runtime_error(what) {}
};

/// A file the current step depends on is absent or unreadable.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(const std::string &path)
      : std::runtime_error("missing artifact: " + path), path_(path) {}
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

/// Configuration document failed validation.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace plugin_se

#endif  // PLUGIN_SE_ERRORS_H_
