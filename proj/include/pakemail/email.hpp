#pragma once

#include <chrono>
#include <optional>
#include <string_view>

#include "pakemail/envelope.hpp"

namespace pakemail::email {

inline constexpr std::string_view kSubjectMarker = "PAKEMAIL";
inline constexpr std::string_view kFingerprintHeader = "X-PakeMail-Fpr";
inline constexpr std::string_view kAttachmentName = "pakemail.bin";

/// "PAKEMAIL <32 hex> <flow digit>"
std::string subject_line(const TransportEnvelope& env);

/// RFC 5322 message with the payload as a base64 application/octet-stream
/// attachment. Throws InvalidArgument if an identity cannot appear in a
/// header (CR, LF, '<' or '>').
Bytes encode_email(const TransportEnvelope& env,
                   std::chrono::system_clock::time_point date = std::chrono::system_clock::now());

/// nullopt when the subject carries no PAKEMAIL marker (ordinary mail).
/// Throws DecodeError when the marker is present but anything is malformed.
std::optional<TransportEnvelope> decode_email(ByteView message);

}  // namespace pakemail::email
