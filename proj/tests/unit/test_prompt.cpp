#include <gtest/gtest.h>

#include <random>

#include "eipl/prompt.hpp"

using namespace eipl;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

}  // namespace

TEST(BuildPrompt, HindiExample) {
    auto p = build_prompt(PromptTemplate::standard(), "Hindi", "ek string ko ulta karo");
    EXPECT_EQ(p.rfind("Generate a Python function called", 0), 0u);
    EXPECT_NE(p.find("written in Hindi: ek string ko ulta karo"), std::string::npos);
}

TEST(BuildPrompt, ResponseAppearsExactlyOnce) {
    auto p = build_prompt(PromptTemplate::standard(), "English", "X");
    EXPECT_NE(p.find("written in English: X"), std::string::npos);
    EXPECT_EQ(count_of(p, "X"), 1u);
}

TEST(BuildPrompt, EmptyResponseRejected) {
    try {
        build_prompt(PromptTemplate::standard(), "Tamil", "");
        FAIL();
    } catch (const PromptError& e) {
        EXPECT_EQ(e.kind(), PromptError::Kind::EmptyResponse);
    }
    EXPECT_THROW(build_prompt(PromptTemplate::standard(), "Tamil", " \n\t"), PromptError);
    EXPECT_THROW(build_prompt(PromptTemplate::standard(), "", "x"), PromptError);
}

TEST(BuildPrompt, MalformedTemplates) {
    EXPECT_THROW(PromptTemplate("no placeholders"), PromptError);
    EXPECT_THROW(PromptTemplate("[SPECIFIED LANGUAGE] [EXPERT RESPONSE] [EXPERT RESPONSE]"), PromptError);
    EXPECT_THROW(PromptTemplate("[SPECIFIED LANGUAGE][SPECIFIED LANGUAGE] [EXPERT RESPONSE]"), PromptError);
    EXPECT_NO_THROW(PromptTemplate("[EXPERT RESPONSE] in [SPECIFIED LANGUAGE]"));
}

TEST(BuildPrompt, PlaceholderTextInResponseIsVerbatim) {
    auto p = build_prompt(PromptTemplate::standard(), "[EXPERT RESPONSE]", "[SPECIFIED LANGUAGE]");
    EXPECT_NE(p.find("written in [EXPERT RESPONSE]: [SPECIFIED LANGUAGE]."), std::string::npos);
}

TEST(BuildPrompt, LengthProperty) {
    std::mt19937 rng(99);
    const auto& t = PromptTemplate::standard();
    const std::size_t base = t.body().size() - PromptTemplate::kLanguagePlaceholder.size() -
                             PromptTemplate::kResponsePlaceholder.size();
    const std::string alphabet = "abc XYZ[]:{}\n\xe0\xa4\x95";
    for (int i = 0; i < 500; ++i) {
        std::string lang = "L", resp = "r";
        for (int k = rng() % 20; k > 0; --k) lang += alphabet[rng() % alphabet.size()];
        for (int k = rng() % 200; k > 0; --k) resp += alphabet[rng() % alphabet.size()];
        auto p = t.build(lang, resp);
        ASSERT_EQ(p.size(), base + lang.size() + resp.size());
        ASSERT_EQ(t.build(lang, resp), p);  // deterministic
    }
}

TEST(BuildPrompt, CustomTemplateFromFile) {
    PromptTemplate t("Write foo in Python. Language: [SPECIFIED LANGUAGE]. Text: [EXPERT RESPONSE]");
    EXPECT_EQ(t.build("Odia", "hello"), "Write foo in Python. Language: Odia. Text: hello");
}

TEST(ExtractCode, SingleFence) {
    EXPECT_EQ(extract_code("```\ndef foo(s):\n    return s[::-1]\n```"), "def foo(s):\n    return s[::-1]");
}

TEST(ExtractCode, ProseAroundFenceStripped) {
    EXPECT_EQ(extract_code("Here is the code:\n```python\ndef foo(x):\n    return x\n```\nHope this helps!"),
              "def foo(x):\n    return x");
}

TEST(ExtractCode, NoDefinition) {
    try {
        extract_code("I cannot help with that.");
        FAIL();
    } catch (const ExtractionError& e) {
        EXPECT_EQ(e.kind(), ExtractionError::Kind::MissingFunction);
    }
}

TEST(ExtractCode, Blank) {
    try {
        extract_code("  \n ");
        FAIL();
    } catch (const ExtractionError& e) {
        EXPECT_EQ(e.kind(), ExtractionError::Kind::Empty);
    }
}

TEST(ExtractCode, UnfencedCompletionTrimmed) {
    EXPECT_EQ(extract_code("\n\ndef foo(a, b):\n    return a + b\n\n"), "def foo(a, b):\n    return a + b");
}

TEST(ExtractCode, FirstFenceDefiningFooWins) {
    std::string c =
        "```python\nimport math\n```\n```python\ndef foo(x):\n    return 1\n```\n```python\ndef foo(x):\n    "
        "return 2\n```";
    EXPECT_EQ(extract_code(c), "def foo(x):\n    return 1");
}

TEST(ExtractCode, CrlfAndIndentedFence) {
    EXPECT_EQ(extract_code("  ```py\r\n  def foo(x):\r\n      return x\r\n  ```\r\n"), "def foo(x):\n    return x");
}

TEST(ExtractCode, UnclosedFenceRunsToEnd) {
    EXPECT_EQ(extract_code("```python\ndef foo(x):\n    return x\n"), "def foo(x):\n    return x");
}

TEST(ExtractCode, FooMustBeADefinition) {
    EXPECT_THROW(extract_code("```\nfoo = lambda x: x\n```"), ExtractionError);
    EXPECT_THROW(extract_code("def foobar(x):\n    return x"), ExtractionError);
    EXPECT_NO_THROW(extract_code("class A:\n    pass\n\ndef foo(x):\n    return A()"));
}

TEST(ExtractCode, IdempotentProperty) {
    const std::vector<std::string> cases{
        "```\ndef foo(s):\n    return s\n```",
        "text\n```python\n    def foo(s):\n        return s\n```\nmore",
        "def foo(x):\n    return x  \n\n",
        "```python\nimport re\n\n\ndef foo(x):\n    return re.sub('a', 'b', x)\n```",
        "```python\ndef foo(x):\n    s = '''\n```\n'''\n    return s\n",
    };
    for (const auto& c : cases) {
        std::string once;
        try {
            once = extract_code(c);
        } catch (const ExtractionError&) {
            continue;
        }
        EXPECT_EQ(extract_code(once), once) << c;
    }
}

TEST(DefinesFunction, Basics) {
    EXPECT_TRUE(defines_function("def foo():\n  pass"));
    EXPECT_TRUE(defines_function("x = 1\n    def foo (a):"));
    EXPECT_FALSE(defines_function("# def foo("));
    EXPECT_FALSE(defines_function("undef foo(x)"));
}
