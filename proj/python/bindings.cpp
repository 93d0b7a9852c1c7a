#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eipl/bank.hpp"
#include "eipl/config.hpp"
#include "eipl/equivalence.hpp"
#include "eipl/eval.hpp"
#include "eipl/gateway.hpp"
#include "eipl/grader.hpp"
#include "eipl/langtag.hpp"
#include "eipl/prompt.hpp"
#include "eipl/rate.hpp"
#include "eipl/sandbox.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace eipl;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Value to_value(const py::handle& o, int depth = 0) {
    if (o.is_none()) return Value();
    if (py::isinstance<py::bool_>(o)) return Value(o.cast<bool>());
    if (py::isinstance<py::int_>(o)) return Value(o.cast<std::int64_t>());
    if (py::isinstance<py::float_>(o)) return Value(o.cast<double>());
    if (py::isinstance<py::str>(o)) return Value(o.cast<std::string>());
    if (py::isinstance<py::list>(o) || py::isinstance<py::tuple>(o)) {
        if (depth >= Value::kMaxDepth) throw py::value_error("value nested too deeply");
        Value::List items;
        for (auto item : o) items.push_back(to_value(item, depth + 1));
        return Value(std::move(items));
    }
    throw py::type_error("unsupported value type");
}

fs::path bank_dir_or_default(const std::optional<std::string>& dir) {
    return dir ? fs::path(*dir) : default_data_dir() / "bank";
}

}  // namespace

PYBIND11_MODULE(_eipl, m) {
    m.doc() = "Code-generation based grading core";

    py::register_exception<ExtractionError>(m, "ExtractionError", PyExc_ValueError);
    py::register_exception<PromptError>(m, "PromptError", PyExc_ValueError);
    py::register_exception<EmptyTextError>(m, "EmptyTextError", PyExc_ValueError);
    py::register_exception<BankError>(m, "BankError", PyExc_RuntimeError);
    py::register_exception<HarnessError>(m, "HarnessError", PyExc_RuntimeError);

    m.def("standard_template", [] { return PromptTemplate::standard().body(); });
    m.def(
        "build_prompt",
        [](const std::string& language, const std::string& response, const std::optional<std::string>& body) {
            return body ? PromptTemplate(*body).build(language, response)
                        : PromptTemplate::standard().build(language, response);
        },
        py::arg("language"), py::arg("response"), py::arg("template") = py::none());
    m.def("extract_code", [](const std::string& raw) { return extract_code(raw); }, py::arg("completion"));
    m.def("fixture_key", &fixture_key, py::arg("model"), py::arg("prompt"));

    m.def("format_percent", &format_percent);
    m.def("format_cell", &format_cell);
    m.def("bucket_of", [](std::int64_t p, std::int64_t t) { return std::string(to_string(bucket_of(p, t))); });

    m.def(
        "value_equal",
        [](const py::object& a, const py::object& b, double tol) { return value_equal(to_value(a), to_value(b), tol); },
        py::arg("a"), py::arg("b"), py::arg("tol") = 1e-9);

    m.def(
        "classify",
        [](const std::string& text, const std::optional<std::string>& lexicon_dir, double threshold) {
            const fs::path dir = lexicon_dir ? fs::path(*lexicon_dir) : default_data_dir() / "lexicon";
            LanguageClassifier c(Lexicon::load(dir / "english.txt", dir / "technical.txt"), threshold);
            auto tag = c.classify(text);
            py::dict d;
            d["category"] = std::string(to_string(tag.category));
            d["script_histogram"] = tag.script_histogram;
            d["english_token_ratio"] = tag.english_token_ratio ? py::object(py::float_(*tag.english_token_ratio))
                                                               : py::object(py::none());
            return d;
        },
        py::arg("text"), py::arg("lexicon_dir") = py::none(), py::arg("threshold") = 0.8);

    m.def(
        "list_questions",
        [](const std::optional<std::string>& dir) {
            py::list out;
            const auto bank = QuestionBank::load_dir(bank_dir_or_default(dir));
            for (const auto& q : bank.questions()) {
                py::dict d;
                d["id"] = q.id;
                d["title"] = q.title;
                d["segment_language"] = std::string(to_string(q.segment_language));
                d["displayed_code"] = q.displayed_code;
                d["instruction_language_mode"] = std::string(to_string(q.instruction_language_mode));
                out.append(d);
            }
            return out;
        },
        py::arg("bank_dir") = py::none());

    m.def(
        "run_candidate",
        [](const std::string& source, const py::list& vectors, int timeout_ms) {
            std::vector<ArgumentTuple> tuples;
            for (auto v : vectors) {
                ArgumentTuple t;
                for (auto x : v) t.values.push_back(to_value(x));
                tuples.push_back(std::move(t));
            }
            ExecutionLimits limits;
            limits.wall_timeout = std::chrono::milliseconds(timeout_ms);
            std::vector<Outcome> outcomes;
            {
                py::gil_scoped_release release;
                outcomes = Sandbox().run_candidate(source, "foo", tuples, limits);
            }
            py::list out;
            for (const auto& o : outcomes) out.append(to_py(to_json(o)));
            return out;
        },
        py::arg("source"), py::arg("vectors"), py::arg("timeout_ms") = 5000);

    m.def(
        "grade",
        [](const std::string& question_id, const std::string& response, const std::string& completion,
           const std::string& language, const std::optional<std::string>& dir) {
            auto bank = QuestionBank::load_dir(bank_dir_or_default(dir));
            const Question* q = bank.find(question_id);
            if (!q) throw py::key_error("unknown question " + question_id);
            auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{completion});
            auto judge = std::make_shared<const Judge>(std::make_shared<const Sandbox>());
            GradingPipeline pipeline(backend, judge);
            GradeAttempt a;
            {
                py::gil_scoped_release release;
                a = pipeline.grade(*q, response, language);
            }
            return to_py(to_json(a));
        },
        py::arg("question_id"), py::arg("response"), py::arg("completion"), py::arg("language") = "English",
        py::arg("bank_dir") = py::none());

    m.def(
        "render_report",
        [](const std::string& outcomes, const std::string& out_dir, const std::optional<std::string>& dir) {
            auto bank = QuestionBank::load_dir(bank_dir_or_default(dir));
            render_report(aggregate(load_outcomes(outcomes), CorrectnessMatrix::for_bank(bank)), out_dir);
        },
        py::arg("outcomes"), py::arg("out_dir"), py::arg("bank_dir") = py::none());
}
