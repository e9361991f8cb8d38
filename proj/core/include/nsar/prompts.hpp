#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsar/retrieval.hpp"

namespace nsar {

/// The question driving the 3-needles protocol.
inline constexpr std::string_view kQuestion =
    "What is the largest special magic number?";

inline constexpr std::array<std::string_view, 6> kStrategyIds = {
    "vanilla", "cot", "react", "self_reflection", "nsar", "nsar_plus3"};

struct PromptTemplate {
    std::string id;
    std::string body;     // contains the {text} placeholder
    bool expects_code = false;
    bool expects_facts = false;
    std::string digest;   // sha256 of the template file bytes
};

struct RenderedPrompt {
    std::string template_id;
    std::string text;
    std::size_t context_char_len = 0;
};

/// Immutable registry of the six prompting strategies, loaded from one text
/// asset per strategy so the wording stays auditable byte-for-byte.
class TemplateRegistry {
public:
    /// Loads <dir>/<id>.txt for every strategy id and validates the template
    /// invariants (#CONTEXT/#ENDCONTEXT/#QUESTION once each, one {text} slot,
    /// the fixed question exactly once).
    static TemplateRegistry load_dir(const std::filesystem::path& dir);

    const PromptTemplate& get(std::string_view template_id) const;
    bool has(std::string_view template_id) const;
    std::vector<std::string> ids() const;

    /// Replaces {text} with context_text; everything else stays byte-identical.
    RenderedPrompt render(std::string_view template_id,
                          std::string_view context_text) const;

    /// Registered-template digests that differ from the goldens; empty means
    /// the assets match the pinned wording.
    std::vector<std::string> golden_mismatches() const;

    /// id -> sha256 pinned at build time.
    static const std::map<std::string, std::string>& golden_digests();

private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

/// Joins sentences in list order with single newlines.
std::string join_retrieved(std::span<const Sentence> selected);

}  // namespace nsar
