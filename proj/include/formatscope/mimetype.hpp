#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "formatscope/errors.hpp"

namespace formatscope {

// The three parameter keys an extended MIME type may carry. Serialization
// order is fixed: version, then software, then hardware.
enum class ParamKey { version = 0, software = 1, hardware = 2 };

const char* to_string(ParamKey key);
std::optional<ParamKey> param_key_from(std::string_view name);

// A base MIME type plus ordered version/software/hardware parameters; the
// normalization target shared by the server header and both engines.
struct ExtendedMimeType {
    std::string type;    // lowercase token
    std::string subtype; // lowercase token
    std::vector<std::pair<ParamKey, std::string>> params; // canonical order, unique keys

    // Accepts "type/subtype" optionally followed by "; key=value" parameters;
    // values with spaces are double-quoted. Unknown keys are dropped,
    // type/subtype lowercased, parameters reordered canonically.
    // Throws MalformedMimeError when there is no '/' separator, the type or
    // subtype is empty, or either side is not an RFC 2045 token.
    static ExtendedMimeType parse(std::string_view text);

    static ExtendedMimeType make(std::string type, std::string subtype);

    std::string serialize() const;
    std::string base() const { return type + "/" + subtype; }

    const std::string* param(ParamKey key) const;
    // Inserts at the canonical position; an existing value for the key wins.
    bool add_param_if_absent(ParamKey key, std::string value);
    void set_param(ParamKey key, std::string value);

    bool operator==(const ExtendedMimeType&) const = default;
};

bool base_equal(const ExtendedMimeType& a, const ExtendedMimeType& b);

inline constexpr std::string_view kUnidentifiedToken = "unidentified";

// Either a recognized extended MIME type or the `unidentified` sentinel.
// The sentinel has no slash, so it can never collide with a real type.
struct IdentificationOutcome {
    std::optional<ExtendedMimeType> mime;

    static IdentificationOutcome unidentified() { return {}; }
    static IdentificationOutcome of(ExtendedMimeType m) { return {std::move(m)}; }
    static IdentificationOutcome parse(std::string_view text);

    bool identified() const { return mime.has_value(); }
    std::string serialize() const;

    bool operator==(const IdentificationOutcome&) const = default;
};

} // namespace formatscope
