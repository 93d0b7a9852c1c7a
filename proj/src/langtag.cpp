#include "eipl/langtag.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "eipl/rate.hpp"

namespace eipl {

std::string_view to_string(LanguageCategory c) {
    switch (c) {
        case LanguageCategory::English: return "English";
        case LanguageCategory::MixedRomanized: return "MixedRomanized";
        case LanguageCategory::NativeScript: return "NativeScript";
    }
    return "English";
}

namespace {

struct ScriptBlock {
    char32_t first, last;
    std::string_view name;
    char32_t digits_first = 0;  // native digits inside the block are not letters
};

// Ordered by code point. Latin is handled separately.
constexpr std::array<ScriptBlock, 26> kBlocks{{
    {0x0370, 0x03FF, "Greek"},
    {0x0400, 0x052F, "Cyrillic"},
    {0x0530, 0x058F, "Armenian"},
    {0x0590, 0x05FF, "Hebrew"},
    {0x0600, 0x06FF, "Arabic", 0x0660},
    {0x0750, 0x077F, "Arabic"},
    {0x08A0, 0x08FF, "Arabic"},
    {0x0900, 0x097F, "Devanagari", 0x0966},
    {0x0980, 0x09FF, "Bengali", 0x09E6},
    {0x0A00, 0x0A7F, "Gurmukhi", 0x0A66},
    {0x0A80, 0x0AFF, "Gujarati", 0x0AE6},
    {0x0B00, 0x0B7F, "Oriya", 0x0B66},
    {0x0B80, 0x0BFF, "Tamil", 0x0BE6},
    {0x0C00, 0x0C7F, "Telugu", 0x0C66},
    {0x0C80, 0x0CFF, "Kannada", 0x0CE6},
    {0x0D00, 0x0D7F, "Malayalam", 0x0D66},
    {0x0D80, 0x0DFF, "Sinhala"},
    {0x0E00, 0x0E7F, "Thai"},
    {0x10A0, 0x10FF, "Georgian"},
    {0x1CD0, 0x1CFF, "Devanagari"},
    {0x3040, 0x30FF, "Kana"},
    {0x3400, 0x4DBF, "Han"},
    {0x4E00, 0x9FFF, "Han"},
    {0xA8E0, 0xA8FF, "Devanagari"},
    {0xAC00, 0xD7AF, "Hangul"},
    {0xFB50, 0xFEFF, "Arabic"},
}};

bool is_latin_letter(char32_t cp) {
    if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) return true;
    if (cp >= 0x00C0 && cp <= 0x024F) return cp != 0x00D7 && cp != 0x00F7;
    if (cp >= 0x0250 && cp <= 0x02AF) return true;  // IPA extensions
    if (cp >= 0x1E00 && cp <= 0x1EFF) return true;  // Latin extended additional
    return false;
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read word list " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        words.push_back(line);
    }
    return words;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

}  // namespace

std::optional<std::string_view> letter_script(char32_t cp) {
    if (is_latin_letter(cp)) return "Latin";
    for (const auto& b : kBlocks) {
        if (cp < b.first) break;
        if (cp > b.last) continue;
        if (b.digits_first && cp >= b.digits_first && cp <= b.digits_first + 9) return std::nullopt;
        if (b.name == "Devanagari" && (cp == 0x0964 || cp == 0x0965)) return std::nullopt;  // dandas
        return b.name;
    }
    return std::nullopt;
}

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > text.size()) {
            out += U'�';
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out += U'�';
            ++i;
            continue;
        }
        out += cp;
        i += len;
    }
    return out;
}

Lexicon::Lexicon(std::vector<std::string> words, std::vector<std::string> technical) {
    for (auto& w : words) words_.insert(lower_ascii(w));
    for (auto& w : technical) words_.insert(lower_ascii(w));
}

Lexicon Lexicon::load(const std::filesystem::path& words, const std::filesystem::path& technical) {
    return Lexicon(read_word_list(words), read_word_list(technical));
}

const std::vector<std::string>& Lexicon::default_technical_terms() {
    static const std::vector<std::string> terms{"function", "list", "string", "array",
                                                "return",   "index", "count", "check"};
    return terms;
}

bool Lexicon::contains(std::string_view word) const {
    std::string w = lower_ascii(word);
    if (contains_exact(w)) return true;

    // Contractions: "doesn't" -> "does", "it's" -> "it".
    if (auto apos = w.find('\''); apos != std::string::npos) {
        std::string stem = ends_with(w, "n't") ? w.substr(0, w.size() - 3) : w.substr(0, apos);
        return !stem.empty() && contains_exact(stem);
    }

    struct Rule {
        std::string_view suffix;
        std::string_view replacement;
    };
    static constexpr Rule kRules[] = {
        {"ies", "y"}, {"es", ""}, {"s", ""},   {"ed", ""},  {"ed", "e"}, {"d", ""},
        {"ing", ""},  {"ing", "e"}, {"ly", ""}, {"er", ""}, {"er", "e"}, {"est", ""},
    };
    for (const auto& r : kRules) {
        if (!ends_with(w, r.suffix)) continue;
        std::string stem = w.substr(0, w.size() - r.suffix.size());
        stem += r.replacement;
        if (stem.size() < 3) continue;
        if (contains_exact(stem)) return true;
        // doubled final consonant: "swapped" -> "swap"
        if (stem.size() >= 4 && r.replacement.empty() && stem[stem.size() - 1] == stem[stem.size() - 2] &&
            contains_exact(stem.substr(0, stem.size() - 1)))
            return true;
    }
    return false;
}

LanguageClassifier::LanguageClassifier(Lexicon lexicon, double english_threshold)
    : lexicon_(std::move(lexicon)), threshold_(english_threshold) {}

LanguageTag LanguageClassifier::classify(std::string_view text) const {
    const auto cps = decode_utf8(text);
    const bool blank = std::all_of(cps.begin(), cps.end(), [](char32_t c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == 0x00A0;
    });
    if (blank) throw EmptyTextError();

    LanguageTag tag;
    bool non_latin = false;
    for (char32_t cp : cps) {
        if (auto script = letter_script(cp)) {
            ++tag.script_histogram[std::string(*script)];
            if (*script != "Latin") non_latin = true;
        }
    }

    // Word tokens: runs of Latin letters, digits, underscores and inner apostrophes.
    int counted = 0, english = 0;
    std::string token;
    bool has_digit = false, has_underscore = false, all_ascii = true;
    auto flush = [&] {
        while (!token.empty() && token.back() == '\'') token.pop_back();
        if (!token.empty()) {
            const bool single = token.size() == 1;
            const bool signal = !has_digit && !has_underscore &&
                                (!single || token == "a" || token == "A" || token == "i" || token == "I");
            if (signal) {
                ++counted;
                if (all_ascii && lexicon_.contains(token)) ++english;
            }
        }
        token.clear();
        has_digit = has_underscore = false;
        all_ascii = true;
    };
    for (char32_t cp : cps) {
        const bool digit = cp >= '0' && cp <= '9';
        if (is_latin_letter(cp) || digit || cp == '_' || (cp == '\'' && !token.empty())) {
            has_digit |= digit;
            has_underscore |= cp == '_';
            if (cp >= 0x80) all_ascii = false;
            append_utf8(token, cp);
        } else {
            flush();
        }
    }
    flush();

    tag.counted_tokens = counted;
    if (counted > 0) tag.english_token_ratio = static_cast<double>(english) / counted;

    if (non_latin) {
        tag.category = LanguageCategory::NativeScript;
    } else if (tag.english_token_ratio && *tag.english_token_ratio < threshold_) {
        tag.category = LanguageCategory::MixedRomanized;
    } else {
        tag.category = LanguageCategory::English;
    }
    return tag;
}

std::string CategoryStats::formatted_rate() const { return format_percent(n_correct, n); }

CategoryReport aggregate_by_category(const std::vector<std::pair<LanguageTag, Verdict>>& attempts) {
    CategoryReport r;
    for (const auto& [tag, verdict] : attempts) {
        CategoryStats* bucket = tag.category == LanguageCategory::English ? &r.english
                                : tag.category == LanguageCategory::MixedRomanized ? &r.mixed_romanized
                                                                                   : &r.native_script;
        const int hit = verdict.correct() ? 1 : 0;
        bucket->n += 1;
        bucket->n_correct += hit;
        if (tag.category != LanguageCategory::English) {
            r.mother_tongue.n += 1;
            r.mother_tongue.n_correct += hit;
        }
    }
    return r;
}

}  // namespace eipl
