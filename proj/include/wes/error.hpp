#pragma once

#include <stdexcept>
#include <string>

namespace wes {

enum class ErrorCode {
  // container parsing
  UnsupportedTransferSyntax,
  UnsupportedOrganization,
  MalformedContainer,
  FrameOutOfRange,
  DecodeFailure,
  PatchOutOfBounds,
  // encoder
  BadPatchShape,
  // ingestion
  BadBase64,
  BadImage,
  UnsupportedFormat,
  FetchFailed,
  // service
  RequestTooLarge,
  MalformedRequest,
  DeadlineExceeded,
  // analytics
  SingleClass,
  NonFiniteInput,
  FractionTooSmall,
  TooFewPoints,
  NonPositiveInput,
  // bench
  TargetUnreachable,
  // cli / io
  BadData,
  BadFlag,
  UnknownSubcommand,
  IoFailure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, const std::string& message, int http_status)
      : std::runtime_error(message), code_(code), http_status_(http_status) {}

  ErrorCode code() const { return code_; }
  // HTTP status carried by FetchFailed; 0 when the failure was not an HTTP response
  int http_status() const { return http_status_; }

 private:
  ErrorCode code_;
  int http_status_ = 0;
};

}  // namespace wes
