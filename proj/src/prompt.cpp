#include "eipl/prompt.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <vector>

namespace eipl {

namespace {

constexpr std::string_view kStandardBody =
    "Generate a Python function called 'foo' that accomplishes the given task using the "
    "following instructions written in [SPECIFIED LANGUAGE]: [EXPERT RESPONSE]. The code "
    "should be returned in the following format:\n"
    "\n"
    "def foo(<parameters here>):\n"
    "    <code>\n"
    "\n"
    "Note: The function should always return a value rather than print the result. "
    "Additionally, generate only the code and no additional test cases or explanatory text.";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos;
         pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
}

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::string_view trim_left(std::string_view s) {
    auto p = s.find_first_not_of(" \t");
    return p == std::string_view::npos ? std::string_view{} : s.substr(p);
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            c = '\n';
        }
        if (c == '\n') {
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    lines.push_back(std::move(cur));
    return lines;
}

// Drops leading blank lines, the common indentation and trailing whitespace.
std::string normalize(const std::vector<std::string>& lines) {
    std::size_t first = 0;
    while (first < lines.size() && is_blank(lines[first])) ++first;
    std::size_t last = lines.size();
    while (last > first && is_blank(lines[last - 1])) --last;
    if (first == last) return {};

    std::size_t indent = std::string::npos;
    for (std::size_t i = first; i < last; ++i) {
        if (is_blank(lines[i])) continue;
        indent = std::min(indent, lines[i].find_first_not_of(" \t"));
    }
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i > first) out += '\n';
        if (lines[i].size() >= indent) out += lines[i].substr(indent);
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
    return out;
}

bool is_fence(std::string_view line) { return trim_left(line).substr(0, 3) == "```"; }

bool is_opening_fence(std::string_view line) {
    auto t = trim_left(line);
    if (t.substr(0, 3) != "```") return false;
    // Info string may carry a language tag but no further backticks.
    return t.substr(3).find('`') == std::string_view::npos;
}

bool is_closing_fence(std::string_view line) {
    auto t = trim_left(line);
    if (t.substr(0, 3) != "```") return false;
    auto rest = t.substr(3);
    while (!rest.empty() && rest.front() == '`') rest.remove_prefix(1);
    return is_blank(rest);
}

}  // namespace

const PromptTemplate& PromptTemplate::standard() {
    static const PromptTemplate t{std::string(kStandardBody)};
    return t;
}

PromptTemplate::PromptTemplate(std::string body) : body_(std::move(body)) {
    if (count_occurrences(body_, kLanguagePlaceholder) != 1 ||
        count_occurrences(body_, kResponsePlaceholder) != 1) {
        throw PromptError(PromptError::Kind::MalformedTemplate,
                          "template must contain each of [SPECIFIED LANGUAGE] and "
                          "[EXPERT RESPONSE] exactly once");
    }
    language_pos_ = body_.find(kLanguagePlaceholder);
    response_pos_ = body_.find(kResponsePlaceholder);
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PromptError(PromptError::Kind::MalformedTemplate,
                          "cannot read template " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(ss.str());
}

std::string PromptTemplate::build(std::string_view language_name,
                                  std::string_view response_text) const {
    if (is_blank(response_text))
        throw PromptError(PromptError::Kind::EmptyResponse, "response text is empty");
    if (is_blank(language_name))
        throw PromptError(PromptError::Kind::EmptyLanguage, "language name is empty");

    struct Slot {
        std::size_t pos;
        std::size_t len;
        std::string_view text;
    };
    Slot a{language_pos_, kLanguagePlaceholder.size(), language_name};
    Slot b{response_pos_, kResponsePlaceholder.size(), response_text};
    if (b.pos < a.pos) std::swap(a, b);

    std::string out;
    out.reserve(body_.size() + language_name.size() + response_text.size());
    std::string_view body = body_;
    out.append(body.substr(0, a.pos));
    out.append(a.text);
    out.append(body.substr(a.pos + a.len, b.pos - a.pos - a.len));
    out.append(b.text);
    out.append(body.substr(b.pos + b.len));
    return out;
}

bool defines_function(std::string_view source, std::string_view name) {
    const std::regex def_re("(^|\\n)[ \\t]*def[ \\t]+" + std::string(name) + "[ \\t]*\\(");
    return std::regex_search(source.begin(), source.end(), def_re);
}

std::string extract_code(std::string_view raw_completion) {
    if (is_blank(raw_completion))
        throw ExtractionError(ExtractionError::Kind::Empty, "completion is empty");

    const auto lines = split_lines(raw_completion);
    bool saw_fence = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!is_opening_fence(lines[i])) continue;
        saw_fence = true;
        std::vector<std::string> block;
        std::size_t j = i + 1;
        for (; j < lines.size() && !is_closing_fence(lines[j]); ++j) block.push_back(lines[j]);
        auto code = normalize(block);
        if (defines_function(code)) return code;
        i = j;
    }

    auto whole = normalize(lines);
    if (defines_function(whole)) {
        if (!saw_fence) return whole;
        // Fenced blocks exist but none defines foo; keep non-fence lines.
        std::vector<std::string> kept;
        for (const auto& l : lines)
            if (!is_fence(l)) kept.push_back(l);
        return normalize(kept);
    }
    throw ExtractionError(ExtractionError::Kind::MissingFunction,
                          "completion does not define a function named foo");
}

}  // namespace eipl
