#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "formatscope/mimetype.hpp"

namespace formatscope {

// Creator metadata pulled out of an identified payload, ready to become
// extended-MIME parameters. All extractors are total: malformed structures
// yield absent values, never errors.
struct PayloadMetadata {
    std::optional<std::string> version;
    std::optional<std::string> software;
    std::optional<std::string> hardware;
    bool pdf_has_eof = false;

    bool operator==(const PayloadMetadata&) const = default;
};

// Version from the %PDF-x.y header, software from the Info dictionary
// /Producer string (else /Creator), pdf_has_eof from the final 1024 bytes.
// Literal-string escapes are decoded; BOM-prefixed UTF-16BE strings are
// converted to UTF-8.
PayloadMetadata extract_pdf_metadata(std::string_view payload);

// Version from the DOCTYPE public identifier; no DOCTYPE means no version.
PayloadMetadata extract_html_version(std::string_view payload);

// Walks the EXIF TIFF structure (APP1 segment for JPEG, native IFD for
// TIFF). Software from tag 0x0131; hardware from Make (0x010F) and Model
// (0x0110) joined with a space.
PayloadMetadata extract_exif_software(std::string_view payload);

// Identified outcomes gain version/software/hardware parameters they lack;
// a signature-derived version wins over the extractor's. Unidentified
// passes through unchanged.
IdentificationOutcome apply_metadata(IdentificationOutcome outcome, const PayloadMetadata& meta);

} // namespace formatscope
