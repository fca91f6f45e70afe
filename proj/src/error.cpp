#include "wes/error.hpp"

namespace wes {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
    case ErrorCode::UnsupportedOrganization: return "UnsupportedOrganization";
    case ErrorCode::MalformedContainer: return "MalformedContainer";
    case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::PatchOutOfBounds: return "PatchOutOfBounds";
    case ErrorCode::BadPatchShape: return "BadPatchShape";
    case ErrorCode::BadBase64: return "BadBase64";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::FetchFailed: return "FetchFailed";
    case ErrorCode::RequestTooLarge: return "RequestTooLarge";
    case ErrorCode::MalformedRequest: return "MalformedRequest";
    case ErrorCode::DeadlineExceeded: return "DeadlineExceeded";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::FractionTooSmall: return "FractionTooSmall";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::BadData: return "BadData";
    case ErrorCode::BadFlag: return "BadFlag";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace wes
