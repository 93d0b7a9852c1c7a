#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eipl/model.hpp"

namespace eipl {

enum class LanguageCategory { English, MixedRomanized, NativeScript };

std::string_view to_string(LanguageCategory c);

struct LanguageTag {
    LanguageCategory category = LanguageCategory::English;
    /// Letter counts per script name ("Latin", "Devanagari", "Tamil", ...).
    std::map<std::string, int> script_histogram;
    /// Share of counted Latin-script tokens found in the lexicon; empty when
    /// there were no countable tokens.
    std::optional<double> english_token_ratio;
    int counted_tokens = 0;
};

class EmptyTextError : public std::invalid_argument {
public:
    EmptyTextError() : std::invalid_argument("response text is empty") {}
};

/// Script of a code point if it is a letter or combining mark of a known
/// writing system; nullopt for digits, punctuation, symbols and whitespace.
std::optional<std::string_view> letter_script(char32_t cp);

/// Decodes UTF-8; malformed bytes become U+FFFD.
std::u32string decode_utf8(std::string_view text);

/// English word list plus a technical whitelist. Lookups are case-insensitive
/// and fall back to stripping common inflectional suffixes.
class Lexicon {
public:
    Lexicon() = default;
    Lexicon(std::vector<std::string> words, std::vector<std::string> technical);

    /// Plain UTF-8 word lists, one token per line; '#' starts a comment line.
    static Lexicon load(const std::filesystem::path& words, const std::filesystem::path& technical);

    bool contains(std::string_view word) const;
    std::size_t size() const { return words_.size(); }

    static const std::vector<std::string>& default_technical_terms();

private:
    bool contains_exact(const std::string& w) const { return words_.count(w) != 0; }
    std::unordered_set<std::string> words_;
};

class LanguageClassifier {
public:
    explicit LanguageClassifier(Lexicon lexicon, double english_threshold = 0.8);

    /// Any non-Latin letter makes the text NativeScript; otherwise the
    /// lexicon ratio over word tokens decides English vs MixedRomanized.
    /// Tokens containing digits or underscores and single letters other than
    /// "a"/"i" carry no language signal and are not counted.
    /// Throws EmptyTextError on blank input.
    LanguageTag classify(std::string_view text) const;

    double threshold() const { return threshold_; }

private:
    Lexicon lexicon_;
    double threshold_;
};

struct CategoryStats {
    int n = 0;
    int n_correct = 0;
    std::optional<double> rate() const {
        return n ? std::optional<double>(static_cast<double>(n_correct) / n) : std::nullopt;
    }
    std::string formatted_rate() const;
};

struct CategoryReport {
    CategoryStats english;
    CategoryStats mixed_romanized;
    CategoryStats native_script;
    CategoryStats mother_tongue;  // mixed_romanized + native_script
};

CategoryReport aggregate_by_category(const std::vector<std::pair<LanguageTag, Verdict>>& attempts);

}  // namespace eipl
