// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trajkit {

/// Root of every error thrown by the library. `kind()` is a stable
/// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// ---- action DSL ----------------------------------------------------------

class ActionParseError : public Error {
 public:
  using Error::Error;
};

/// No grammar rule matched the input.
class UnknownAction : public ActionParseError {
 public:
  explicit UnknownAction(const std::string& text)
      : ActionParseError("UnknownAction", "unknown action: '" + text + "'") {}
  struct Message {};
  UnknownAction(Message, const std::string& message) : ActionParseError("UnknownAction", message) {}
};

/// A rule matched by keyword but its arguments are invalid.
class MalformedArguments : public ActionParseError {
 public:
  MalformedArguments(const std::string& text, const std::string& why)
      : ActionParseError("MalformedArguments",
                         "malformed arguments in '" + text + "': " + why) {}
  struct Message {};
  MalformedArguments(Message, const std::string& message)
      : ActionParseError("MalformedArguments", message) {}
};

/// A model reply without an "Action:" line.
class MissingActionLine : public ActionParseError {
 public:
  MissingActionLine() : ActionParseError("MissingActionLine", "no line starting with 'Action:' found") {}
};

class InvalidAction : public Error {
 public:
  explicit InvalidAction(const std::string& why) : Error("InvalidAction", why) {}
};

// ---- trajectory storage --------------------------------------------------

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& why) : Error("SchemaError", why) {}
};

class OrderError : public Error {
 public:
  explicit OrderError(const std::string& why) : Error("OrderError", why) {}
};

/// Action text failed to parse while loading step `step_index`.
class StepActionError : public Error {
 public:
  StepActionError(int step_index, const std::string& why)
      : Error("ActionParseError", "step " + std::to_string(step_index) + ": " + why),
        step_index_(step_index) {}
  int step_index() const noexcept { return step_index_; }

 private:
  int step_index_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& why) : Error("IoError", why) {}
};

class ImageDecodeError : public Error {
 public:
  explicit ImageDecodeError(const std::string& why) : Error("ImageDecodeError", why) {}
};

// ---- model gateway -------------------------------------------------------

/// Failure class that the retry policy may retry.
class TransientError : public Error {
 public:
  using Error::Error;
};

class RateLimited : public TransientError {
 public:
  explicit RateLimited(const std::string& why) : TransientError("RateLimited", why) {}
};

class Timeout : public TransientError {
 public:
  explicit Timeout(const std::string& why) : TransientError("Timeout", why) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& why) : Error("ProtocolError", why) {}
};

class BatchAborted : public Error {
 public:
  explicit BatchAborted(const std::string& why) : Error("BatchAborted", why) {}
};

class EmbedderUnavailable : public Error {
 public:
  EmbedderUnavailable(const std::string& why, std::vector<std::string> task_ids = {})
      : Error("EmbedderUnavailable", why), task_ids_(std::move(task_ids)) {}
  /// Tasks whose verdicts could not be computed; a rerun can start from them.
  const std::vector<std::string>& task_ids() const noexcept { return task_ids_; }

 private:
  std::vector<std::string> task_ids_;
};

class DegenerateEmbedding : public Error {
 public:
  explicit DegenerateEmbedding(const std::string& why) : Error("DegenerateEmbedding", why) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& why) : Error("ConfigError", why) {}
};

// ---- pipeline stages -----------------------------------------------------

class MissingThought : public Error {
 public:
  MissingThought(const std::string& trajectory_id, int step)
      : Error("MissingThought", "trajectory '" + trajectory_id + "' step " +
                                    std::to_string(step) + " has no thought") {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& why) : Error("PreconditionError", why) {}
};

/// A stage stopped part-way; progress up to `completed` is checkpointed.
class StageAborted : public Error {
 public:
  StageAborted(const std::string& trajectory_id, int completed, const std::string& cause)
      : Error("StageAborted", "trajectory '" + trajectory_id + "' aborted after " +
                                  std::to_string(completed) + " step(s): " + cause),
        trajectory_id_(trajectory_id),
        completed_(completed) {}
  const std::string& trajectory_id() const noexcept { return trajectory_id_; }
  int completed() const noexcept { return completed_; }

 private:
  std::string trajectory_id_;
  int completed_;
};

class DanglingImageRef : public Error {
 public:
  DanglingImageRef(const std::string& trajectory_id, int step, const std::string& ref)
      : Error("DanglingImageRef", "image '" + ref + "' for trajectory '" + trajectory_id +
                                      "' step " + std::to_string(step) + " does not exist") {}
};

class ScenarioSchemaError : public Error {
 public:
  explicit ScenarioSchemaError(const std::string& why) : Error("ScenarioSchemaError", why) {}
};

}  // namespace trajkit
