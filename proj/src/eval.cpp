#include "eipl/eval.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "eipl/io.hpp"
#include "eipl/rate.hpp"

namespace eipl {

using nlohmann::json;

const std::vector<std::string>& declared_languages() {
    static const std::vector<std::string> langs{"Gujarati", "Hindi",  "Punjabi", "Marathi", "Bengali",
                                                "Telugu",   "Urdu",   "Kannada", "Odia",    "Tamil"};
    return langs;
}

TranslationDataset TranslationDataset::load(const std::filesystem::path& path, const QuestionBank& bank,
                                            const std::vector<std::string>& languages) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw DatasetError(DatasetError::Kind::Parse, 0, "cannot read dataset " + path.string());
    const std::set<std::string> allowed(languages.begin(), languages.end());

    TranslationDataset d;
    for (const auto& line : read_lines(path)) {
        DatasetRow r;
        r.row = line.number;
        try {
            auto j = json::parse(line.text);
            r.language = j.at("language").get<std::string>();
            r.question_id = j.at("question_id").get<std::string>();
            r.response_text = j.at("response_text").get<std::string>();
            if (auto it = j.find("respondent_id"); it != j.end() && !it->is_null())
                r.respondent_id = it->is_string() ? it->get<std::string>() : it->dump();
        } catch (const json::exception& e) {
            throw DatasetError(DatasetError::Kind::Parse, line.number, e.what());
        }
        if (!bank.find(r.question_id))
            throw DatasetError(DatasetError::Kind::UnknownQuestion, line.number,
                               "unknown question " + r.question_id);
        if (!allowed.count(r.language))
            throw DatasetError(DatasetError::Kind::UnknownLanguage, line.number,
                               "undeclared language " + r.language);
        d.rows.push_back(std::move(r));
    }
    return d;
}

std::string row_fingerprint(const DatasetRow& r) {
    json j = {r.language, r.question_id, r.response_text};
    return sha256_hex(j.dump()).substr(0, 16);
}

json to_json(const RowOutcome& o) {
    json j = {{"row", o.row},
              {"language", o.language},
              {"question_id", o.question_id},
              {"fingerprint", o.fingerprint},
              {"verdict", to_json(o.verdict)},
              {"raw_completion", o.raw_completion},
              {"retriable", o.retriable}};
    j["respondent_id"] = o.respondent_id ? json(*o.respondent_id) : json(nullptr);
    j["extracted_code"] = o.extracted_code ? json(*o.extracted_code) : json(nullptr);
    return j;
}

RowOutcome row_outcome_from_json(const json& j) {
    RowOutcome o;
    o.row = j.at("row").get<std::size_t>();
    o.language = j.at("language").get<std::string>();
    o.question_id = j.at("question_id").get<std::string>();
    o.fingerprint = j.value("fingerprint", std::string());
    o.verdict = verdict_from_json(j.at("verdict"));
    o.raw_completion = j.value("raw_completion", std::string());
    o.retriable = j.value("retriable", false);
    if (auto it = j.find("respondent_id"); it != j.end() && !it->is_null()) o.respondent_id = it->get<std::string>();
    if (auto it = j.find("extracted_code"); it != j.end() && !it->is_null()) o.extracted_code = it->get<std::string>();
    return o;
}

std::vector<RowOutcome> load_outcomes(const std::filesystem::path& path) {
    std::vector<RowOutcome> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(row_outcome_from_json(json::parse(lines[i].text)));
        } catch (const std::exception& e) {
            if (i + 1 == lines.size() && !lines[i].terminated) break;
            throw StorageFailure("outcomes line " + std::to_string(lines[i].number) + " is corrupt: " + e.what());
        }
    }
    return out;
}

namespace {

RowOutcome grade_row(const DatasetRow& r, const Question& q, const GradingPipeline& pipeline,
                     bool& harness_failure) {
    RowOutcome o;
    o.row = r.row;
    o.language = r.language;
    o.question_id = r.question_id;
    o.respondent_id = r.respondent_id;
    o.fingerprint = row_fingerprint(r);
    try {
        GradeAttempt a = pipeline.grade(q, r.response_text, r.language);
        o.verdict = std::move(a.verdict);
        o.raw_completion = std::move(a.raw_completion);
        o.extracted_code = std::move(a.extracted_code);
    } catch (const GraderError& e) {
        switch (e.kind()) {
            case GraderError::Kind::EmptyResponse:
                o.verdict = Verdict::make(VerdictKind::GenerationError, std::string("empty response: ") + e.what());
                break;
            case GraderError::Kind::Internal:
                harness_failure = true;
                o.retriable = true;
                o.verdict = Verdict::make(VerdictKind::GenerationError, std::string("harness failure: ") + e.what());
                break;
            default:
                o.retriable = true;
                o.verdict = Verdict::make(VerdictKind::GenerationError, e.what());
                break;
        }
    } catch (const std::exception& e) {
        harness_failure = true;
        o.retriable = true;
        o.verdict = Verdict::make(VerdictKind::GenerationError, std::string("harness failure: ") + e.what());
    }
    return o;
}

}  // namespace

BatchResult run_batch(const TranslationDataset& dataset, const QuestionBank& bank,
                      const GradingPipeline& pipeline, const std::filesystem::path& outcomes_path,
                      const BatchOptions& options) {
    truncate_torn_tail(outcomes_path);
    std::map<std::size_t, RowOutcome> done;
    for (auto& o : load_outcomes(outcomes_path))
        if (!o.retriable) done[o.row] = std::move(o);

    BatchResult result;
    result.outcomes.resize(dataset.rows.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
        const auto& r = dataset.rows[i];
        auto it = done.find(r.row);
        if (it != done.end() && it->second.fingerprint == row_fingerprint(r)) {
            result.outcomes[i] = it->second;
            ++result.resumed;
        } else {
            pending.push_back(i);
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::exception_ptr failure;

    auto worker = [&] {
        while (!stop) {
            const std::size_t k = next++;
            if (k >= pending.size()) return;
            const std::size_t i = pending[k];
            const auto& r = dataset.rows[i];
            bool harness_failure = false;
            RowOutcome o = grade_row(r, *bank.find(r.question_id), pipeline, harness_failure);
            std::lock_guard lock(mu);
            try {
                append_line_durable(outcomes_path, to_json(o).dump());
            } catch (...) {
                if (!failure) failure = std::current_exception();
                stop = true;
                return;
            }
            result.outcomes[i] = std::move(o);
            ++result.graded;
            if (harness_failure) ++result.harness_failures;
            if (options.on_row_done) options.on_row_done(i);
        }
    };

    const int n = std::max(1, std::min<int>(options.concurrency, static_cast<int>(pending.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return result;
}

std::string_view to_string(Bucket b) {
    switch (b) {
        case Bucket::Purple: return "Purple";
        case Bucket::LightBlue: return "LightBlue";
        case Bucket::Green: return "Green";
        case Bucket::Yellow: return "Yellow";
        case Bucket::Grey: return "Grey";
    }
    return "Grey";
}

Bucket bucket_of(std::int64_t passed, std::int64_t total) {
    if (passed < 0 || total < 0 || passed > total)
        throw std::invalid_argument("bucket_of requires 0 <= passed <= total");
    if (total == 0) return Bucket::Grey;
    // Compare passed/total against quarter marks without rounding.
    if (4 * passed < total) return Bucket::Yellow;
    if (2 * passed < total) return Bucket::Green;
    if (4 * passed < 3 * total) return Bucket::LightBlue;
    return Bucket::Purple;
}

CorrectnessMatrix::CorrectnessMatrix(std::vector<std::string> languages, std::vector<MatrixQuestion> questions)
    : languages_(std::move(languages)), questions_(std::move(questions)) {}

CorrectnessMatrix CorrectnessMatrix::for_bank(const QuestionBank& bank, const std::vector<std::string>& languages) {
    std::vector<MatrixQuestion> qs;
    for (const auto& q : bank.questions()) qs.push_back({q.id, q.title, q.segment_language});
    return CorrectnessMatrix(languages, std::move(qs));
}

void CorrectnessMatrix::ensure_column(const std::string& language) {
    if (std::find(languages_.begin(), languages_.end(), language) == languages_.end())
        languages_.push_back(language);
}

void CorrectnessMatrix::ensure_row(const std::string& question_id) {
    auto it = std::find_if(questions_.begin(), questions_.end(),
                           [&](const MatrixQuestion& q) { return q.id == question_id; });
    if (it == questions_.end()) questions_.push_back({question_id, question_id, SegmentLanguage::Python});
}

void CorrectnessMatrix::add(const std::string& language, const std::string& question_id, bool passed) {
    ensure_column(language);
    ensure_row(question_id);
    auto& c = cells_[{language, question_id}];
    c.total += 1;
    c.passed += passed ? 1 : 0;
}

void CorrectnessMatrix::set(const std::string& language, const std::string& question_id, Cell c) {
    if (c.passed < 0 || c.passed > c.total) throw std::invalid_argument("cell requires 0 <= passed <= total");
    ensure_column(language);
    ensure_row(question_id);
    cells_[{language, question_id}] = c;
}

Cell CorrectnessMatrix::cell(const std::string& language, const std::string& question_id) const {
    auto it = cells_.find({language, question_id});
    return it == cells_.end() ? Cell{} : it->second;
}

Cell CorrectnessMatrix::total(const std::string& language) const {
    Cell t;
    for (const auto& q : questions_) {
        auto c = cell(language, q.id);
        t.passed += c.passed;
        t.total += c.total;
    }
    return t;
}

Bucket CorrectnessMatrix::bucket(const std::string& language, const std::string& question_id) const {
    auto c = cell(language, question_id);
    return bucket_of(c.passed, c.total);
}

std::string CorrectnessMatrix::cell_text(const std::string& language, const std::string& question_id) const {
    auto c = cell(language, question_id);
    return format_cell(c.passed, c.total);
}

std::string CorrectnessMatrix::total_text(const std::string& language) const {
    auto t = total(language);
    return format_cell(t.passed, t.total);
}

CorrectnessMatrix aggregate(const std::vector<RowOutcome>& outcomes, CorrectnessMatrix base) {
    for (const auto& o : outcomes) base.add(o.language, o.question_id, o.verdict.correct());
    return base;
}

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string css_class(Bucket b) {
    switch (b) {
        case Bucket::Purple: return "purple";
        case Bucket::LightBlue: return "lightblue";
        case Bucket::Green: return "green";
        case Bucket::Yellow: return "yellow";
        case Bucket::Grey: return "grey";
    }
    return "grey";
}

std::string segment_label(SegmentLanguage s) { return s == SegmentLanguage::C ? "C" : "Py"; }

}  // namespace

std::string render_csv(const CorrectnessMatrix& m) {
    std::string out = "language,question_id,title,passed,total,rate,cell,bucket\n";
    auto line = [&](const std::string& lang, const std::string& qid, const std::string& title, Cell c) {
        out += csv_field(lang) + "," + csv_field(qid) + "," + csv_field(title) + "," + std::to_string(c.passed) +
               "," + std::to_string(c.total) + "," + format_percent(c.passed, c.total) + "," +
               csv_field(format_cell(c.passed, c.total)) + "," + std::string(to_string(bucket_of(c.passed, c.total))) +
               "\n";
    };
    for (const auto& lang : m.languages()) {
        for (const auto& q : m.questions()) line(lang, q.id, q.title, m.cell(lang, q.id));
        line(lang, "TOTAL", "Totals", m.total(lang));
    }
    return out;
}

std::string render_html(const CorrectnessMatrix& m) {
    std::string out;
    out += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
    out += "<title>Correctness by language</title>\n<style>\n";
    out += "table{border-collapse:collapse;font-family:sans-serif;font-size:14px}\n";
    out += "th,td{border:1px solid #333;padding:4px 8px;text-align:left}\n";
    out += "td.purple{background:#e3d4f0}\ntd.lightblue{background:#d3e6f5}\n";
    out += "td.green{background:#d6efd3}\ntd.yellow{background:#fbf3c7}\ntd.grey{background:#e6e6e6}\n";
    out += "tr.totals td,tr.totals th{font-weight:bold}\n</style>\n</head>\n<body>\n";
    out += "<table>\n<thead>\n<tr><th></th><th>QID</th>";
    for (const auto& lang : m.languages()) out += "<th>" + html_escape(lang) + "</th>";
    out += "</tr>\n</thead>\n<tbody>\n";

    const auto& qs = m.questions();
    for (std::size_t i = 0; i < qs.size(); ++i) {
        out += "<tr>";
        if (i == 0 || qs[i].segment != qs[i - 1].segment) {
            std::size_t span = 1;
            while (i + span < qs.size() && qs[i + span].segment == qs[i].segment) ++span;
            out += "<th rowspan=\"" + std::to_string(span) + "\">" + segment_label(qs[i].segment) + "</th>";
        }
        out += "<td>" + html_escape(qs[i].title) + "</td>";
        for (const auto& lang : m.languages())
            out += "<td class=\"" + css_class(m.bucket(lang, qs[i].id)) + "\">" +
                   html_escape(m.cell_text(lang, qs[i].id)) + "</td>";
        out += "</tr>\n";
    }
    if (!qs.empty()) {
        out += "<tr class=\"totals\"><td></td><th>Totals:</th>";
        for (const auto& lang : m.languages()) {
            auto t = m.total(lang);
            out += "<td class=\"" + css_class(bucket_of(t.passed, t.total)) + "\">" +
                   html_escape(format_cell(t.passed, t.total)) + "</td>";
        }
        out += "</tr>\n";
    }
    out += "</tbody>\n</table>\n";
    out += "<p>purple 75-100%, light blue 50-75%, green 25-50%, yellow 0-25%, grey no responses</p>\n";
    out += "</body>\n</html>\n";
    return out;
}

void render_report(const CorrectnessMatrix& m, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StorageFailure("cannot create " + dir.string() + ": " + ec.message());
    write_file_atomic(dir / "correctness.csv", render_csv(m));
    write_file_atomic(dir / "correctness.html", render_html(m));
}

}  // namespace eipl
