#include "faultfabric/common/error.hpp"

namespace faultfabric {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::Busy: return "Busy";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::StaleSnapshot: return "StaleSnapshot";
    case ErrorCode::NoBackendAvailable: return "NoBackendAvailable";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::WrongHost: return "WrongHost";
    case ErrorCode::AlreadyInjected: return "AlreadyInjected";
    case ErrorCode::NotInjected: return "NotInjected";
    case ErrorCode::UnknownResource: return "UnknownResource";
    case ErrorCode::UnknownTenant: return "UnknownTenant";
    case ErrorCode::NotOwner: return "NotOwner";
    case ErrorCode::ItemBusy: return "ItemBusy";
    case ErrorCode::RestoreFailed: return "RestoreFailed";
    case ErrorCode::PlanInvalid: return "PlanInvalid";
    case ErrorCode::CampaignAlreadyRunning: return "CampaignAlreadyRunning";
    case ErrorCode::UnknownCampaign: return "UnknownCampaign";
    case ErrorCode::UnknownInjection: return "UnknownInjection";
    case ErrorCode::AlreadyFinished: return "AlreadyFinished";
    case ErrorCode::NotTerminated: return "NotTerminated";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::BadAttach: return "BadAttach";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

}  // namespace faultfabric
