#pragma once

// Outcome counting for the BERT4Rec-vs-SASRec comparison records: per-paper
// per-dataset win/tie rows aggregated into a per-dataset table with a total
// row over all records.

#include <string>
#include <vector>

namespace seqlab {

enum class Outcome { bert4rec_wins, sasrec_wins, tie };

std::string to_string(Outcome o);
Outcome parse_outcome(const std::string& s);

struct ComparisonRecord {
    std::string paper_id;
    std::string dataset;
    Outcome outcome = Outcome::tie;
};

struct OutcomeRow {
    std::string dataset;
    int total = 0;
    int bert4rec_wins = 0;
    int sasrec_wins = 0;
    int ties = 0;
    std::vector<std::string> bert4rec_papers, sasrec_papers, tie_papers;
};

struct OutcomeTable {
    std::vector<OutcomeRow> rows; // datasets with >= min_papers records, by descending total
    OutcomeRow total;             // over ALL records, filtered-out datasets included
    int min_papers = 5;
};

// header: paper_id,dataset,outcome; duplicate (paper_id, dataset) pairs and
// unknown outcome tokens are rejected
std::vector<ComparisonRecord> load_comparisons(const std::string& path);
std::vector<ComparisonRecord> parse_comparisons(const std::string& text, const std::string& name);

OutcomeTable aggregate_outcomes(const std::vector<ComparisonRecord>& records, int min_papers = 5);

// the counting rule applied to raw metric vectors: a model wins only when
// better on every metric, otherwise the comparison is a tie
Outcome derive_outcome(const std::vector<double>& bert4rec_metrics,
                       const std::vector<double>& sasrec_metrics);

// display percentages rounded half-up
int percent_display(int count, int total);

std::string outcome_table_csv(const OutcomeTable& table);
std::string outcome_table_json(const OutcomeTable& table); // exact fractions

} // namespace seqlab
