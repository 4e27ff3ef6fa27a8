#include "seqlab/review.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "seqlab/corpus.hpp" // DataError
#include "seqlab/errors.hpp"

namespace seqlab {

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::bert4rec_wins: return "bert4rec_wins";
        case Outcome::sasrec_wins: return "sasrec_wins";
        case Outcome::tie: return "tie";
    }
    return "?";
}

Outcome parse_outcome(const std::string& s) {
    if (s == "bert4rec_wins") return Outcome::bert4rec_wins;
    if (s == "sasrec_wins") return Outcome::sasrec_wins;
    if (s == "tie") return Outcome::tie;
    throw DataError("unknown outcome token: \"" + s + "\"");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::vector<ComparisonRecord> parse_comparisons(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "paper_id,dataset,outcome")
        throw DataError(name + ": expected header \"paper_id,dataset,outcome\"");

    std::vector<ComparisonRecord> records;
    std::set<std::pair<std::string, std::string>> seen;
    long long row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        std::string paper, dataset, outcome;
        if (!std::getline(row, paper, ',') || !std::getline(row, dataset, ',') ||
            !std::getline(row, outcome))
            throw DataError(name + ":" + std::to_string(row_no) + ": malformed row");
        paper = trim(paper);
        dataset = trim(dataset);
        ComparisonRecord rec;
        rec.paper_id = paper;
        rec.dataset = dataset;
        try {
            rec.outcome = parse_outcome(trim(outcome));
        } catch (const DataError& e) {
            throw DataError(name + ":" + std::to_string(row_no) + ": " + e.what());
        }
        if (!seen.insert({paper, dataset}).second)
            throw DataError(name + ":" + std::to_string(row_no) + ": duplicate record (" + paper +
                            ", " + dataset + ")");
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<ComparisonRecord> load_comparisons(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open comparison file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_comparisons(buf.str(), path);
}

namespace {

void count_into(OutcomeRow& row, const ComparisonRecord& rec) {
    ++row.total;
    switch (rec.outcome) {
        case Outcome::bert4rec_wins:
            ++row.bert4rec_wins;
            row.bert4rec_papers.push_back(rec.paper_id);
            break;
        case Outcome::sasrec_wins:
            ++row.sasrec_wins;
            row.sasrec_papers.push_back(rec.paper_id);
            break;
        case Outcome::tie:
            ++row.ties;
            row.tie_papers.push_back(rec.paper_id);
            break;
    }
}

} // namespace

OutcomeTable aggregate_outcomes(const std::vector<ComparisonRecord>& records, int min_papers) {
    if (records.empty()) throw ContractError("aggregate_outcomes: no records");
    OutcomeTable table;
    table.min_papers = min_papers;
    table.total.dataset = "Total";

    std::map<std::string, OutcomeRow> by_dataset;
    for (auto& rec : records) {
        auto& row = by_dataset[rec.dataset];
        row.dataset = rec.dataset;
        count_into(row, rec);
        count_into(table.total, rec);
    }
    for (auto& [name, row] : by_dataset)
        if (row.total >= min_papers) table.rows.push_back(row);
    std::sort(table.rows.begin(), table.rows.end(), [](const OutcomeRow& a, const OutcomeRow& b) {
        if (a.total != b.total) return a.total > b.total;
        return a.dataset < b.dataset;
    });
    return table;
}

Outcome derive_outcome(const std::vector<double>& bert4rec_metrics,
                       const std::vector<double>& sasrec_metrics) {
    if (bert4rec_metrics.empty() || bert4rec_metrics.size() != sasrec_metrics.size())
        throw ContractError("derive_outcome: metric vectors must be non-empty and equal length");
    bool bert_all = true, sasrec_all = true;
    for (std::size_t i = 0; i < bert4rec_metrics.size(); ++i) {
        if (bert4rec_metrics[i] <= sasrec_metrics[i]) bert_all = false;
        if (sasrec_metrics[i] <= bert4rec_metrics[i]) sasrec_all = false;
    }
    if (bert_all) return Outcome::bert4rec_wins;
    if (sasrec_all) return Outcome::sasrec_wins;
    return Outcome::tie;
}

int percent_display(int count, int total) {
    if (total == 0) return 0;
    return (int)std::floor(100.0 * count / total + 0.5);
}

std::string outcome_table_csv(const OutcomeTable& table) {
    std::ostringstream out;
    out << "dataset,total,bert4rec_wins,bert4rec_pct,sasrec_wins,sasrec_pct,ties,ties_pct\n";
    auto emit = [&](const OutcomeRow& r) {
        out << r.dataset << ',' << r.total << ',' << r.bert4rec_wins << ','
            << percent_display(r.bert4rec_wins, r.total) << ',' << r.sasrec_wins << ','
            << percent_display(r.sasrec_wins, r.total) << ',' << r.ties << ','
            << percent_display(r.ties, r.total) << '\n';
    };
    for (auto& r : table.rows) emit(r);
    emit(table.total);
    return out.str();
}

std::string outcome_table_json(const OutcomeTable& table) {
    nlohmann::json j;
    auto row_json = [](const OutcomeRow& r) {
        nlohmann::json jr;
        jr["dataset"] = r.dataset;
        jr["total"] = r.total;
        jr["bert4rec_wins"] = r.bert4rec_wins;
        jr["sasrec_wins"] = r.sasrec_wins;
        jr["ties"] = r.ties;
        jr["bert4rec_fraction"] = r.total ? (double)r.bert4rec_wins / r.total : 0.0;
        jr["sasrec_fraction"] = r.total ? (double)r.sasrec_wins / r.total : 0.0;
        jr["ties_fraction"] = r.total ? (double)r.ties / r.total : 0.0;
        jr["bert4rec_papers"] = r.bert4rec_papers;
        jr["sasrec_papers"] = r.sasrec_papers;
        jr["tie_papers"] = r.tie_papers;
        return jr;
    };
    j["min_papers"] = table.min_papers;
    j["rows"] = nlohmann::json::array();
    for (auto& r : table.rows) j["rows"].push_back(row_json(r));
    j["total"] = row_json(table.total);
    return j.dump(2);
}

} // namespace seqlab
