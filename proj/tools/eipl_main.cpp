// eipl: command-line front end for grading, batch evaluation and the HTTP service.
#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eipl/bank.hpp"
#include "eipl/config.hpp"
#include "eipl/eval.hpp"
#include "eipl/gateway.hpp"
#include "eipl/grader.hpp"
#include "eipl/io.hpp"
#include "eipl/langtag.hpp"
#include "eipl/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eipl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHarness = 1;
constexpr int kExitUsage = 2;

struct BackendOptions {
    std::string kind = "replay";
    std::string fixtures;
    std::string mock_responses;
    std::string record;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
    cmd->add_option("--backend", o.kind, "Completion backend")->check(CLI::IsMember({"live", "replay", "mock"}));
    cmd->add_option("--fixtures", o.fixtures, "Fixture file for the replay backend");
    cmd->add_option("--mock-responses", o.mock_responses,
                    "JSON array of canned completions for the mock backend; an object "
                    "{\"fail\": \"BackendUnavailable\"} queues a failure");
    cmd->add_option("--record", o.record, "Append live completions to this fixture file");
}

std::shared_ptr<CompletionBackend> make_backend(const BackendOptions& o, const AppConfig& cfg) {
    std::shared_ptr<CompletionBackend> backend;
    if (o.kind == "live") {
        backend = std::make_shared<LiveBackend>(cfg.live);
        if (!o.record.empty()) backend = std::make_shared<RecordingBackend>(backend, o.record);
    } else if (o.kind == "replay") {
        if (o.fixtures.empty()) throw ConfigError("--backend replay needs --fixtures");
        if (!fs::exists(o.fixtures)) throw ConfigError("fixture file not found: " + o.fixtures);
        backend = std::make_shared<ReplayBackend>(FixtureStore::load(o.fixtures));
    } else {
        auto mock = std::make_shared<ScriptedBackend>();
        if (!o.mock_responses.empty()) {
            json steps = json::parse(read_file(o.mock_responses));
            for (const auto& s : steps) {
                if (s.is_string()) {
                    mock->push(s.get<std::string>());
                } else {
                    const auto fail = s.at("fail").get<std::string>();
                    mock->push_failure(fail == "BackendUnavailable" ? GatewayError::Kind::BackendUnavailable
                                       : fail == "ReplayMiss"       ? GatewayError::Kind::ReplayMiss
                                                                    : GatewayError::Kind::MockExhausted);
                }
            }
        }
        backend = mock;
    }
    return backend;
}

AppConfig load_config(const std::string& path) {
    AppConfig cfg = path.empty() ? AppConfig{} : AppConfig::load(path);
    cfg.apply_environment();
    ChildSlots::global().set_capacity(cfg.max_children);
    return cfg;
}

std::shared_ptr<const GradingPipeline> make_pipeline(const AppConfig& cfg, std::shared_ptr<CompletionBackend> backend) {
    auto sandbox = std::make_shared<const Sandbox>(cfg.sandbox);
    auto judge = std::make_shared<const Judge>(sandbox, cfg.limits, cfg.float_tolerance);
    PipelineConfig pc;
    if (cfg.prompt_template_path)
        pc.prompt_template = std::make_shared<const PromptTemplate>(PromptTemplate::load(*cfg.prompt_template_path));
    pc.model_name = cfg.model_name;
    pc.temperature = cfg.temperature;
    pc.max_output_tokens = cfg.max_output_tokens;
    pc.request_timeout = cfg.request_timeout;
    return std::make_shared<const GradingPipeline>(std::move(backend), std::move(judge), pc);
}

std::pair<std::string, int> parse_listen(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) return {"127.0.0.1", std::stoi(addr)};
    std::string host = addr.substr(0, colon);
    if (host.empty()) host = "0.0.0.0";
    return {host, std::stoi(addr.substr(colon + 1))};
}

Lexicon load_lexicon(const AppConfig& cfg) {
    const auto dir = default_data_dir() / "lexicon";
    return Lexicon::load(cfg.lexicon_path.value_or(dir / "english.txt"),
                         cfg.technical_path.value_or(dir / "technical.txt"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Code-generation based grading for explain-in-plain-language questions"};
    app.require_subcommand(0, 1);
    bool print_template = false;
    app.add_flag("--print-template", print_template, "Print the built-in generation prompt and exit");

    // eval
    auto* eval = app.add_subcommand("eval", "Batch evaluation of translation datasets");
    eval->require_subcommand(1);

    auto* run = eval->add_subcommand("run", "Grade every row of a dataset");
    std::string dataset_path, out_dir, bank_dir, config_path;
    int concurrency = 4;
    BackendOptions run_backend;
    run->add_option("--dataset", dataset_path, "Line-delimited JSON dataset")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--bank", bank_dir, "Question bank directory");
    run->add_option("--config", config_path, "Config file");
    run->add_option("--concurrency", concurrency, "Rows graded in parallel")->check(CLI::PositiveNumber);
    add_backend_options(run, run_backend);

    auto* report = eval->add_subcommand("report", "Render the correctness matrix from outcomes");
    std::string outcomes_path, report_out, report_bank;
    report->add_option("--outcomes", outcomes_path, "Outcomes file written by eval run")->required();
    report->add_option("--out", report_out, "Output directory")->required();
    report->add_option("--bank", report_bank, "Question bank directory (row titles and order)");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the grading HTTP service");
    std::string serve_bank, listen = "127.0.0.1:8080", profile_path, static_dir, journal_path, serve_config;
    BackendOptions serve_backend;
    serve->add_option("--bank", serve_bank, "Question bank directory");
    serve->add_option("--listen", listen, "host:port (port 0 picks a free port)");
    serve->add_option("--profile", profile_path, "Course profile selecting and ordering questions");
    serve->add_option("--static", static_dir, "Directory with the built UI");
    serve->add_option("--journal", journal_path, "Attempt journal (default ./eipl_state/attempts.jsonl)");
    serve->add_option("--config", serve_config, "Config file");
    add_backend_options(serve, serve_backend);

    // langtag
    auto* langtag = app.add_subcommand("langtag", "Classify response language and aggregate by category");
    std::vector<std::string> texts;
    std::string lang_journal, lang_config;
    langtag->add_option("--text", texts, "Text to classify (repeatable)");
    langtag->add_option("--journal", lang_journal, "Attempt journal to aggregate");
    langtag->add_option("--config", lang_config, "Config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (print_template) {
            std::cout << PromptTemplate::standard().body();
            std::cout.flush();
            return kExitOk;
        }

        if (run->parsed()) {
            const AppConfig cfg = load_config(config_path);
            const auto bank = QuestionBank::load_dir(bank_dir.empty() ? default_data_dir() / "bank" : fs::path(bank_dir));
            const auto dataset = TranslationDataset::load(dataset_path, bank);
            auto pipeline = make_pipeline(cfg, make_backend(run_backend, cfg));
            fs::create_directories(out_dir);
            BatchOptions opts;
            opts.concurrency = concurrency;
            const auto result = run_batch(dataset, bank, *pipeline, fs::path(out_dir) / "outcomes.jsonl", opts);
            render_report(aggregate(result.outcomes, CorrectnessMatrix::for_bank(bank)), out_dir);
            std::cerr << "graded " << result.graded << " rows, resumed " << result.resumed << ", harness failures "
                      << result.harness_failures << "\n";
            return result.harness_failures ? kExitHarness : kExitOk;
        }

        if (report->parsed()) {
            const auto bank =
                QuestionBank::load_dir(report_bank.empty() ? default_data_dir() / "bank" : fs::path(report_bank));
            render_report(aggregate(load_outcomes(outcomes_path), CorrectnessMatrix::for_bank(bank)), report_out);
            return kExitOk;
        }

        if (serve->parsed()) {
            const AppConfig cfg = load_config(serve_config);
            auto bank = QuestionBank::load_dir(serve_bank.empty() ? default_data_dir() / "bank" : fs::path(serve_bank));
            if (!profile_path.empty()) bank = apply_profile(bank, CourseProfile::load(profile_path));
            const fs::path journal = journal_path.empty() ? fs::path("eipl_state") / "attempts.jsonl" : fs::path(journal_path);
            if (journal.has_parent_path()) {
                std::error_code ec;
                fs::create_directories(journal.parent_path(), ec);
            }
            auto grader = std::make_shared<Grader>(std::make_shared<const QuestionBank>(std::move(bank)),
                                                   make_pipeline(cfg, make_backend(serve_backend, cfg)), journal,
                                                   cfg.policy);
            Service service(grader, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));

            // Shut down cleanly on SIGINT/SIGTERM.
            sigset_t set;
            sigemptyset(&set);
            sigaddset(&set, SIGINT);
            sigaddset(&set, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &set, nullptr);
            std::thread waiter([&] {
                int sig = 0;
                sigwait(&set, &sig);
                service.stop();
            });
            waiter.detach();

            const auto [host, port] = parse_listen(listen);
            const bool ok = service.serve(host, port, [&, h = host](int bound) {
                std::cout << "listening on " << h << ":" << bound << std::endl;
            });
            if (!ok) {
                std::cerr << "eipl: cannot listen on " << listen << "\n";
                return kExitUsage;
            }
            return kExitOk;
        }

        if (langtag->parsed()) {
            const AppConfig cfg = load_config(lang_config);
            LanguageClassifier classifier(load_lexicon(cfg), cfg.english_threshold);
            for (const auto& t : texts) {
                auto tag = classifier.classify(t);
                json j = {{"category", to_string(tag.category)},
                          {"english_token_ratio",
                           tag.english_token_ratio ? json(*tag.english_token_ratio) : json(nullptr)},
                          {"scripts", tag.script_histogram}};
                std::cout << j.dump() << "\n";
            }
            if (!lang_journal.empty()) {
                std::vector<std::pair<LanguageTag, Verdict>> tagged;
                for (const auto& [sid, record] : AttemptJournal(lang_journal).replay())
                    for (const auto& a : record.attempts)
                        if (!a.response_text.empty()) tagged.emplace_back(classifier.classify(a.response_text), a.verdict);
                const auto r = aggregate_by_category(tagged);
                auto row = [](const char* name, const CategoryStats& s) {
                    std::cout << name << "\t" << s.n_correct << "/" << s.n << "\t" << s.formatted_rate() << "\n";
                };
                row("English", r.english);
                row("MixedRomanized", r.mixed_romanized);
                row("NativeScript", r.native_script);
                row("MotherTongue", r.mother_tongue);
            }
            return kExitOk;
        }

        std::cout << app.help();
        return kExitOk;
    } catch (const HarnessError& e) {
        std::cerr << "eipl: harness failure: " << e.what() << "\n";
        return kExitHarness;
    } catch (const std::exception& e) {
        std::cerr << "eipl: " << e.what() << "\n";
        return kExitUsage;
    }
}
