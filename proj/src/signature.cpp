#include "formatscope/signature.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "formatscope/errors.hpp"

namespace formatscope {

using nlohmann::json;

const char* to_string(SetMode mode) {
    return mode == SetMode::fine ? "fine" : "broad";
}

size_t ByteSignature::literal_byte_count() const {
    size_t total = 0;
    for (const auto& element : elements) {
        if (const auto* lit = std::get_if<LiteralElement>(&element)) {
            total += lit->bytes.size();
        }
    }
    return total;
}

bool looks_like_text(std::string_view payload) {
    if (payload.empty()) return false;
    std::string_view sample = payload.substr(0, 512);
    for (char c : sample) {
        auto u = static_cast<unsigned char>(c);
        if (u == 0x09 || u == 0x0a || u == 0x0d) continue;
        if (u < 0x20 || u > 0x7e) return false;
    }
    return true;
}

bool html_tokens_present(std::string_view payload) {
    std::string head = to_lower(payload.substr(0, 1024));
    return head.find("<html") != std::string::npos ||
           head.find("<!doctype html") != std::string::npos ||
           head.find("<head") != std::string::npos ||
           head.find("<body") != std::string::npos;
}

namespace {

// ---- schema parsing -------------------------------------------------------

std::string node_path(const std::string& base, size_t index) {
    return base + "/" + std::to_string(index);
}

Bytes require_hex(const json& node, const std::string& path) {
    if (!node.is_string()) throw SchemaError(path, "expected a hex string");
    auto decoded = hex_decode(node.get<std::string>());
    if (!decoded || decoded->empty()) throw SchemaError(path, "invalid or empty hex literal");
    return *decoded;
}

SignatureElement parse_element(const json& node, const std::string& path) {
    if (node.is_string()) {
        std::string text = node.get<std::string>();
        if (text == "??") return AnyByteElement{};
        auto decoded = hex_decode(text);
        if (!decoded || decoded->empty()) throw SchemaError(path, "invalid or empty hex literal");
        return LiteralElement{std::move(*decoded)};
    }
    if (node.is_object() && node.contains("gap")) {
        const auto& gap = node["gap"];
        if (!gap.is_array() || gap.size() != 2 || !gap[0].is_number_unsigned() || !gap[1].is_number_unsigned()) {
            throw SchemaError(path + "/gap", "expected [min, max] of unsigned integers");
        }
        GapElement g{gap[0].get<size_t>(), gap[1].get<size_t>()};
        if (g.min > g.max) throw SchemaError(path + "/gap", "min exceeds max");
        if (g.max > kScanWindow) throw SchemaError(path + "/gap", "max exceeds the scan window");
        return g;
    }
    throw SchemaError(path, "expected a hex literal, \"??\", or {\"gap\":[min,max]}");
}

Anchor parse_anchor(const json& node, const std::string& path) {
    if (!node.is_object() || node.size() != 1) {
        throw SchemaError(path, "expected exactly one of {\"bof\": n}, {\"eof\": n}, {\"window\": [s,e]}");
    }
    if (node.contains("bof")) {
        if (!node["bof"].is_number_unsigned()) throw SchemaError(path + "/bof", "expected an unsigned offset");
        auto off = node["bof"].get<size_t>();
        if (off > kScanWindow) throw SchemaError(path + "/bof", "offset exceeds the scan window");
        return BofAnchor{off};
    }
    if (node.contains("eof")) {
        if (!node["eof"].is_number_unsigned()) throw SchemaError(path + "/eof", "expected an unsigned offset");
        auto off = node["eof"].get<size_t>();
        if (off > kScanWindow) throw SchemaError(path + "/eof", "offset exceeds the scan window");
        return EofAnchor{off};
    }
    if (node.contains("window")) {
        const auto& w = node["window"];
        if (!w.is_array() || w.size() != 2 || !w[0].is_number_unsigned() || !w[1].is_number_unsigned()) {
            throw SchemaError(path + "/window", "expected [start, end] of unsigned integers");
        }
        WindowAnchor a{w[0].get<size_t>(), w[1].get<size_t>()};
        if (a.start >= a.end) throw SchemaError(path + "/window", "start must be below end");
        if (a.end > kScanWindow) throw SchemaError(path + "/window", "end exceeds the scan window");
        return a;
    }
    throw SchemaError(path, "unknown anchor kind");
}

// ---- matching -------------------------------------------------------------

// Backtracking matcher. `limit` is one past the last byte the elements may
// touch. Gaps try their shortest expansion first.
bool match_elements(std::string_view payload, size_t pos, size_t limit,
                    const std::vector<SignatureElement>& elements, size_t index,
                    const std::vector<VersionAlternative>& versions,
                    std::optional<std::string>& version_out) {
    if (index == elements.size()) {
        if (versions.empty()) return true;
        for (const auto& alt : versions) {
            if (pos + alt.pattern.size() <= limit &&
                payload.compare(pos, alt.pattern.size(), alt.pattern) == 0) {
                version_out = alt.version;
                return true;
            }
        }
        return false;
    }
    const auto& element = elements[index];
    if (const auto* lit = std::get_if<LiteralElement>(&element)) {
        if (pos + lit->bytes.size() > limit) return false;
        if (payload.compare(pos, lit->bytes.size(), lit->bytes) != 0) return false;
        return match_elements(payload, pos + lit->bytes.size(), limit, elements, index + 1, versions, version_out);
    }
    if (std::holds_alternative<AnyByteElement>(element)) {
        if (pos + 1 > limit) return false;
        return match_elements(payload, pos + 1, limit, elements, index + 1, versions, version_out);
    }
    const auto& gap = std::get<GapElement>(element);
    for (size_t g = gap.min; g <= gap.max; ++g) {
        if (pos + g > limit) break;
        if (match_elements(payload, pos + g, limit, elements, index + 1, versions, version_out)) return true;
    }
    return false;
}

} // namespace

bool SignatureSet::match_signature(std::string_view payload, const ByteSignature& sig,
                                   std::optional<std::string>& version_out) const {
    if (sig.trailer) {
        bool waived = heuristics_.tolerant_pdf_eof &&
                      sig.output.type == "application" && sig.output.subtype == "pdf";
        if (!waived) {
            size_t window = std::min(sig.trailer->window, payload.size());
            std::string_view tail = payload.substr(payload.size() - window);
            if (tail.find(sig.trailer->literal) == std::string_view::npos) return false;
        }
    }

    size_t bof_limit = std::min(payload.size(), kScanWindow);
    if (const auto* bof = std::get_if<BofAnchor>(&sig.anchor)) {
        if (bof->offset >= payload.size()) return false;
        return match_elements(payload, bof->offset, bof_limit, sig.elements, 0, sig.versions, version_out);
    }
    if (const auto* eof = std::get_if<EofAnchor>(&sig.anchor)) {
        if (payload.size() < eof->offset) return false;
        size_t start = payload.size() - eof->offset;
        return match_elements(payload, start, payload.size(), sig.elements, 0, sig.versions, version_out);
    }
    const auto& window = std::get<WindowAnchor>(sig.anchor);
    size_t end = std::min({window.end, bof_limit, payload.size()});
    for (size_t pos = window.start; pos < end; ++pos) {
        if (match_elements(payload, pos, bof_limit, sig.elements, 0, sig.versions, version_out)) return true;
        version_out.reset();
    }
    return false;
}

std::vector<SignatureSet::Match> SignatureSet::collect_matches(std::string_view payload) const {
    std::vector<Match> matches;
    auto try_signature = [&](uint32_t index) {
        const ByteSignature& sig = signatures_[index];
        std::optional<std::string> version;
        if (match_signature(payload, sig, version)) {
            matches.push_back(Match{&sig, std::move(version)});
        }
    };
    if (!payload.empty()) {
        for (uint32_t index : bof_dispatch_[static_cast<unsigned char>(payload[0])]) {
            try_signature(index);
        }
    }
    for (uint32_t index : general_) try_signature(index);
    return matches;
}

IdentificationOutcome SignatureSet::resolve_matches(const std::vector<Match>& matches) {
    const Match* best = nullptr;
    for (const auto& candidate : matches) {
        bool suppressed = false;
        for (const auto& other : matches) {
            if (other.signature == candidate.signature) continue;
            const auto& over = other.signature->priority_over;
            if (std::find(over.begin(), over.end(), candidate.signature->id) != over.end()) {
                suppressed = true;
                break;
            }
        }
        if (suppressed) continue;
        if (best == nullptr) {
            best = &candidate;
            continue;
        }
        size_t a = candidate.signature->literal_byte_count();
        size_t b = best->signature->literal_byte_count();
        if (a > b || (a == b && candidate.signature->id < best->signature->id)) {
            best = &candidate;
        }
    }
    if (best == nullptr) return IdentificationOutcome::unidentified();
    ExtendedMimeType out = best->signature->output;
    if (best->version) out.add_param_if_absent(ParamKey::version, *best->version);
    return IdentificationOutcome::of(std::move(out));
}

IdentificationOutcome SignatureSet::identify(std::string_view payload) const {
    IdentificationOutcome outcome = resolve_matches(collect_matches(payload));
    if (outcome.identified()) return outcome;
    if (heuristics_.tolerant_html && html_tokens_present(payload)) {
        return IdentificationOutcome::of(ExtendedMimeType::make("text", "html"));
    }
    if (heuristics_.text_plain_fallback && looks_like_text(payload)) {
        return IdentificationOutcome::of(ExtendedMimeType::make("text", "plain"));
    }
    return IdentificationOutcome::unidentified();
}

SignatureSet SignatureSet::compile(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaError("", "top level must be an object");

    SignatureSet set;
    if (root.contains("name")) {
        if (!root["name"].is_string()) throw SchemaError("/name", "expected a string");
        set.name_ = root["name"].get<std::string>();
    }

    if (!root.contains("mode") || !root["mode"].is_string()) {
        throw SchemaError("/mode", "expected \"fine\" or \"broad\"");
    }
    std::string mode = root["mode"].get<std::string>();
    if (mode == "fine") {
        set.mode_ = SetMode::fine;
    } else if (mode == "broad") {
        set.mode_ = SetMode::broad;
    } else {
        throw SchemaError("/mode", "expected \"fine\" or \"broad\", got \"" + mode + "\"");
    }

    if (root.contains("heuristics")) {
        const auto& h = root["heuristics"];
        if (!h.is_object()) throw SchemaError("/heuristics", "expected an object of boolean flags");
        for (const auto& [key, value] : h.items()) {
            if (!value.is_boolean()) throw SchemaError("/heuristics/" + key, "expected a boolean");
            bool flag = value.get<bool>();
            if (key == "tolerant_html") {
                set.heuristics_.tolerant_html = flag;
            } else if (key == "tolerant_pdf_eof") {
                set.heuristics_.tolerant_pdf_eof = flag;
            } else if (key == "text_plain_fallback") {
                set.heuristics_.text_plain_fallback = flag;
            } else {
                throw SchemaError("/heuristics/" + key, "unknown heuristic flag");
            }
        }
    }

    if (!root.contains("signatures") || !root["signatures"].is_array()) {
        throw SchemaError("/signatures", "expected an array");
    }
    const auto& sig_nodes = root["signatures"];
    for (size_t i = 0; i < sig_nodes.size(); ++i) {
        const std::string path = node_path("/signatures", i);
        const auto& node = sig_nodes[i];
        if (!node.is_object()) throw SchemaError(path, "expected an object");

        ByteSignature sig;
        if (!node.contains("id") || !node["id"].is_string() || node["id"].get<std::string>().empty()) {
            throw SchemaError(path + "/id", "expected a nonempty string");
        }
        sig.id = node["id"].get<std::string>();

        if (!node.contains("mime") || !node["mime"].is_string()) {
            throw SchemaError(path + "/mime", "expected a MIME string");
        }
        try {
            sig.output = ExtendedMimeType::parse(node["mime"].get<std::string>());
        } catch (const MalformedMimeError& e) {
            throw SchemaError(path + "/mime", e.what());
        }

        if (!node.contains("anchor")) throw SchemaError(path + "/anchor", "missing");
        sig.anchor = parse_anchor(node["anchor"], path + "/anchor");

        if (!node.contains("elements") || !node["elements"].is_array() || node["elements"].empty()) {
            throw SchemaError(path + "/elements", "expected a nonempty array");
        }
        const auto& element_nodes = node["elements"];
        for (size_t j = 0; j < element_nodes.size(); ++j) {
            sig.elements.push_back(parse_element(element_nodes[j], node_path(path + "/elements", j)));
        }
        if (sig.literal_byte_count() == 0) {
            throw SchemaError(path + "/elements", "at least one literal element is required");
        }

        if (node.contains("versions")) {
            const auto& versions = node["versions"];
            if (!versions.is_array() || versions.empty()) {
                throw SchemaError(path + "/versions", "expected a nonempty array");
            }
            for (size_t j = 0; j < versions.size(); ++j) {
                const std::string vpath = node_path(path + "/versions", j);
                const auto& v = versions[j];
                if (!v.is_object() || !v.contains("bytes") || !v.contains("version") || !v["version"].is_string() ||
                    v["version"].get<std::string>().empty()) {
                    throw SchemaError(vpath, "expected {\"bytes\": hex, \"version\": nonempty string}");
                }
                sig.versions.push_back({require_hex(v["bytes"], vpath + "/bytes"), v["version"].get<std::string>()});
            }
        }

        if (node.contains("trailer")) {
            const auto& t = node["trailer"];
            if (!t.is_object() || !t.contains("literal") || !t.contains("window") ||
                !t["window"].is_number_unsigned()) {
                throw SchemaError(path + "/trailer", "expected {\"literal\": hex, \"window\": n}");
            }
            TrailerRule rule;
            rule.literal = require_hex(t["literal"], path + "/trailer/literal");
            rule.window = t["window"].get<size_t>();
            if (rule.window == 0 || rule.window > kScanWindow) {
                throw SchemaError(path + "/trailer/window", "window must be in [1, scan window]");
            }
            sig.trailer = std::move(rule);
        }

        if (node.contains("priority_over")) {
            const auto& priorities = node["priority_over"];
            if (!priorities.is_array()) throw SchemaError(path + "/priority_over", "expected an array of ids");
            for (size_t j = 0; j < priorities.size(); ++j) {
                if (!priorities[j].is_string()) {
                    throw SchemaError(node_path(path + "/priority_over", j), "expected a signature id");
                }
                sig.priority_over.push_back(priorities[j].get<std::string>());
            }
        }

        if (node.contains("note")) {
            if (!node["note"].is_string()) throw SchemaError(path + "/note", "expected a string");
            sig.note = node["note"].get<std::string>();
        }
        set.signatures_.push_back(std::move(sig));
    }

    // Uniqueness and reference resolution.
    for (size_t i = 0; i < set.signatures_.size(); ++i) {
        for (size_t j = i + 1; j < set.signatures_.size(); ++j) {
            if (set.signatures_[i].id == set.signatures_[j].id) {
                throw SchemaError(node_path("/signatures", j) + "/id",
                                  "duplicate id \"" + set.signatures_[i].id + "\"");
            }
        }
    }
    auto find_index = [&](const std::string& id) -> std::optional<size_t> {
        for (size_t i = 0; i < set.signatures_.size(); ++i) {
            if (set.signatures_[i].id == id) return i;
        }
        return std::nullopt;
    };
    for (size_t i = 0; i < set.signatures_.size(); ++i) {
        for (const auto& ref : set.signatures_[i].priority_over) {
            if (!find_index(ref)) {
                throw SchemaError(node_path("/signatures", i) + "/priority_over",
                                  "unknown signature id \"" + ref + "\"");
            }
        }
    }

    // Cycle detection over the priority graph (DFS, three colors).
    {
        enum class Color { white, grey, black };
        std::vector<Color> color(set.signatures_.size(), Color::white);
        std::vector<std::string> stack;
        auto dfs = [&](auto&& self, size_t v) -> void {
            color[v] = Color::grey;
            stack.push_back(set.signatures_[v].id);
            for (const auto& ref : set.signatures_[v].priority_over) {
                size_t w = *find_index(ref);
                if (color[w] == Color::grey) {
                    auto begin = std::find(stack.begin(), stack.end(), ref);
                    std::vector<std::string> cycle(begin, stack.end());
                    cycle.push_back(ref);
                    throw CycleError(std::move(cycle));
                }
                if (color[w] == Color::white) self(self, w);
            }
            stack.pop_back();
            color[v] = Color::black;
        };
        for (size_t i = 0; i < set.signatures_.size(); ++i) {
            if (color[i] == Color::white) dfs(dfs, i);
        }
    }

    // First-byte dispatch index.
    for (uint32_t i = 0; i < set.signatures_.size(); ++i) {
        const ByteSignature& sig = set.signatures_[i];
        const auto* bof = std::get_if<BofAnchor>(&sig.anchor);
        const auto* lit = sig.elements.empty() ? nullptr : std::get_if<LiteralElement>(&sig.elements[0]);
        if (bof != nullptr && bof->offset == 0 && lit != nullptr) {
            set.bof_dispatch_[static_cast<unsigned char>(lit->bytes[0])].push_back(i);
        } else {
            set.general_.push_back(i);
        }
    }
    return set;
}

SignatureSet SignatureSet::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path.string(), "cannot open signature file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return compile(buffer.str());
}

} // namespace formatscope
