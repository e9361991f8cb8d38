#include "nsar/prompts.hpp"

#include <fstream>
#include <sstream>

#include "nsar/digest.hpp"
#include "nsar/errors.hpp"

namespace nsar {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open template: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void validate_template(const PromptTemplate& t) {
    auto must_once = [&](std::string_view needle, std::string_view what) {
        std::size_t n = count_occurrences(t.body, needle);
        if (n != 1) {
            throw InvalidArgumentError("template '" + t.id + "' must contain " +
                                       std::string(what) + " exactly once, found " +
                                       std::to_string(n));
        }
    };
    must_once("#CONTEXT", "#CONTEXT");
    must_once("#ENDCONTEXT", "#ENDCONTEXT");
    must_once("#QUESTION", "#QUESTION");
    must_once("{text}", "the {text} placeholder");
    must_once(kQuestion, "the question string");
}

}  // namespace

const std::map<std::string, std::string>& TemplateRegistry::golden_digests() {
    // sha256 of the shipped template files, pinned so silent drift in the
    // assets fails loudly.
    static const std::map<std::string, std::string> goldens = {
        {"vanilla", "18ba5c52f524133184ee78835a58b03d31056aa2682c1aee334e0eb863530bea"},
        {"cot", "2449aaa9f8e35c91e1ec42d85e9869bb552823b5b9c652537f3bf331bec82e8a"},
        {"react", "882867c76353b4a0f267ebdb0b5b8daa4141f6b859bd7242fd74cfcd5a36cd53"},
        {"self_reflection",
         "9c18a8c9f0e7cdd079611e07fa3ad20a71edcf48a02f4edc6c273881e3c28ed9"},
        {"nsar", "fbf4bed755b297f4596a1476b931bd5ddfbc9c79aa3c9c0101aac3e9a9c41074"},
        {"nsar_plus3",
         "e8b1f9937479636f761e2ba464e68dde5d5ebcf6bcf1d23af29a491d81d52e5e"},
    };
    return goldens;
}

TemplateRegistry TemplateRegistry::load_dir(const std::filesystem::path& dir) {
    TemplateRegistry registry;
    for (std::string_view id : kStrategyIds) {
        PromptTemplate t;
        t.id = std::string(id);
        t.body = read_file(dir / (t.id + ".txt"));
        t.expects_code = t.expects_facts = (id == "nsar" || id == "nsar_plus3");
        t.digest = sha256_hex(t.body);
        validate_template(t);
        registry.templates_.emplace(t.id, std::move(t));
    }
    return registry;
}

bool TemplateRegistry::has(std::string_view template_id) const {
    return templates_.find(template_id) != templates_.end();
}

const PromptTemplate& TemplateRegistry::get(std::string_view template_id) const {
    auto it = templates_.find(template_id);
    if (it == templates_.end()) {
        throw NotFoundError("unknown template id: " + std::string(template_id));
    }
    return it->second;
}

RenderedPrompt TemplateRegistry::render(std::string_view template_id,
                                        std::string_view context_text) const {
    const PromptTemplate& t = get(template_id);
    if (context_text.empty()) {
        throw InvalidArgumentError("context_text must be non-empty");
    }
    std::size_t slot = t.body.find("{text}");
    RenderedPrompt rendered;
    rendered.template_id = t.id;
    rendered.text.reserve(t.body.size() + context_text.size());
    rendered.text.append(t.body, 0, slot);
    rendered.text.append(context_text);
    rendered.text.append(t.body, slot + 6, std::string::npos);
    rendered.context_char_len = context_text.size();
    return rendered;
}

std::vector<std::string> TemplateRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

std::vector<std::string> TemplateRegistry::golden_mismatches() const {
    std::vector<std::string> bad;
    for (const auto& [id, golden] : golden_digests()) {
        auto it = templates_.find(id);
        if (it == templates_.end() || it->second.digest != golden) bad.push_back(id);
    }
    return bad;
}

std::string join_retrieved(std::span<const Sentence> selected) {
    std::string out;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out.append(selected[i].text);
    }
    return out;
}

}  // namespace nsar
