#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faultfabric {

enum class ErrorCode {
  ParseError,
  ValidationError,
  InvalidSpec,
  NotFound,
  Unreachable,
  Busy,
  Conflict,
  StaleSnapshot,
  NoBackendAvailable,
  OutOfWindow,
  EmptyPayload,
  WrongHost,
  AlreadyInjected,
  NotInjected,
  UnknownResource,
  UnknownTenant,
  NotOwner,
  ItemBusy,
  RestoreFailed,
  PlanInvalid,
  CampaignAlreadyRunning,
  UnknownCampaign,
  UnknownInjection,
  AlreadyFinished,
  NotTerminated,
  EmptyWindow,
  BadAttach,
  Internal,
};

std::string_view to_string(ErrorCode code);

// Every fallible operation in the library throws this. The code is what
// REST handlers and the CLI map to status codes; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace faultfabric
