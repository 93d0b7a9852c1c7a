#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eipl {

class PromptError : public std::runtime_error {
public:
    enum class Kind { EmptyResponse, EmptyLanguage, MalformedTemplate };
    PromptError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class ExtractionError : public std::runtime_error {
public:
    enum class Kind { Empty, MissingFunction };
    ExtractionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Code-generation prompt with a language placeholder and a response
/// placeholder, each appearing exactly once.
class PromptTemplate {
public:
    static constexpr std::string_view kLanguagePlaceholder = "[SPECIFIED LANGUAGE]";
    static constexpr std::string_view kResponsePlaceholder = "[EXPERT RESPONSE]";

    /// The built-in generation prompt.
    static const PromptTemplate& standard();

    /// Throws PromptError(MalformedTemplate) unless each placeholder occurs once.
    explicit PromptTemplate(std::string body);

    /// Reads the whole file as the template body.
    static PromptTemplate load(const std::filesystem::path& path);

    const std::string& body() const { return body_; }

    /// Substitutes both placeholders in a single pass; substituted text is
    /// never rescanned, so responses containing placeholder-like text are
    /// inserted verbatim.
    std::string build(std::string_view language_name, std::string_view response_text) const;

private:
    std::string body_;
    std::size_t language_pos_ = 0;
    std::size_t response_pos_ = 0;
};

inline std::string build_prompt(const PromptTemplate& t, std::string_view language_name,
                                std::string_view response_text) {
    return t.build(language_name, response_text);
}

/// True if `source` contains a top-level-looking `def foo(` (any indentation).
bool defines_function(std::string_view source, std::string_view name = "foo");

/// Pulls the candidate source out of a raw completion: the first fenced
/// block that defines `foo`, otherwise the whole completion if it defines
/// `foo` itself. Leading blank lines, common indentation and trailing
/// whitespace are removed.
std::string extract_code(std::string_view raw_completion);

}  // namespace eipl
