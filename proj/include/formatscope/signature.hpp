#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "formatscope/mimetype.hpp"
#include "formatscope/util.hpp"

namespace formatscope {

// Identification reads at most this much from each end of a payload, so a
// single identify call is O(window) no matter how large the resource is.
inline constexpr size_t kScanWindow = 64 * 1024;

struct LiteralElement {
    Bytes bytes;
    bool operator==(const LiteralElement&) const = default;
};
struct AnyByteElement {
    bool operator==(const AnyByteElement&) const = default;
};
struct GapElement {
    size_t min = 0;
    size_t max = 0;
    bool operator==(const GapElement&) const = default;
};
using SignatureElement = std::variant<LiteralElement, AnyByteElement, GapElement>;

struct BofAnchor {
    size_t offset = 0;
};
struct EofAnchor {
    size_t offset = 0; // measured backward from payload end
};
struct WindowAnchor {
    size_t start = 0;
    size_t end = 0; // exclusive; matches may begin anywhere in [start, end)
};
using Anchor = std::variant<BofAnchor, EofAnchor, WindowAnchor>;

// One alternative of a version capture group: when the signature's elements
// have matched, the alternatives are tried in order at the next position and
// the first matching pattern selects the version parameter.
struct VersionAlternative {
    Bytes pattern;
    std::string version;
};

// A literal that must occur within the final `window` bytes of the payload.
// Lets one signature demand both a header and a trailer (the strict PDF
// end-of-file rule).
struct TrailerRule {
    Bytes literal;
    size_t window = 0;
};

struct ByteSignature {
    std::string id;
    ExtendedMimeType output;
    Anchor anchor;
    std::vector<SignatureElement> elements;
    std::vector<VersionAlternative> versions;
    std::optional<TrailerRule> trailer;
    std::vector<std::string> priority_over;
    std::string note;

    size_t literal_byte_count() const;
};

struct Heuristics {
    bool tolerant_html = false;
    bool tolerant_pdf_eof = false;
    bool text_plain_fallback = false;
};

enum class SetMode { fine, broad };

const char* to_string(SetMode mode);

// Sample-based check used by the plain-text fallback: the first 512 bytes
// must be non-empty printable ASCII (tab/LF/CR allowed).
bool looks_like_text(std::string_view payload);

// True when one of "<html", "<!doctype html", "<head", "<body" occurs
// case-insensitively within the first 1024 bytes.
bool html_tokens_present(std::string_view payload);

class SignatureSet {
public:
    struct Match {
        const ByteSignature* signature = nullptr;
        std::optional<std::string> version;
    };

    // Validates and compiles a signature file (see docs/signature-schema.md).
    // Throws SchemaError on structural problems and CycleError when the
    // priority relation is cyclic.
    static SignatureSet compile(const std::string& json_text);
    static SignatureSet load_file(const std::filesystem::path& path);

    const std::string& name() const { return name_; }
    SetMode mode() const { return mode_; }
    const Heuristics& heuristics() const { return heuristics_; }
    const std::vector<ByteSignature>& signatures() const { return signatures_; }

    // Pure function of (payload, set): evaluates every signature, resolves
    // the matches, then applies the set's tolerant heuristics if nothing won.
    IdentificationOutcome identify(std::string_view payload) const;

    std::vector<Match> collect_matches(std::string_view payload) const;

    // Drops every match that another match has priority over, then picks the
    // survivor with the greatest total literal byte count (ties broken by
    // smallest id). Empty input resolves to unidentified.
    static IdentificationOutcome resolve_matches(const std::vector<Match>& matches);

private:
    SignatureSet() = default;
    bool match_signature(std::string_view payload, const ByteSignature& sig,
                         std::optional<std::string>& version_out) const;

    std::string name_;
    SetMode mode_ = SetMode::fine;
    Heuristics heuristics_;
    std::vector<ByteSignature> signatures_;
    // First-byte dispatch for BOF(0) signatures that begin with a literal;
    // everything else is scanned linearly.
    std::array<std::vector<uint32_t>, 256> bof_dispatch_{};
    std::vector<uint32_t> general_;
};

} // namespace formatscope
