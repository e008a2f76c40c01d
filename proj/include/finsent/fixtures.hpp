#pragma once

#include <string>
#include <vector>

#include "finsent/corpus.hpp"
#include "finsent/eval.hpp"
#include "finsent/knowledge.hpp"

namespace finsent::fixtures {

// Deterministic synthetic resources for the desk-scale harness: a small
// vocabulary with latent token valences, a 32-sentence corpus whose scores
// derive from them, a 10-headword thesaurus, a 16-dimensional embedding
// table, a 12-triplet relation graph over 10 entities, and toy lexicons.
// Tests build them in memory; `finsent make-fixtures` writes them to disk.

std::vector<corpus::SentimentInstance> synthetic_corpus();  // 32 instances
corpus::EmbeddingTable synthetic_embeddings();              // dimension 16
corpus::DtTable synthetic_dt();                             // 10 headwords
std::vector<knowledge::Triplet> toy_triplets();             // 12 over 10 entities
corpus::LexiconSet toy_lexicons();

// Two opposite-polarity rows plus one correctly-signed row, for the
// error-report path.
std::vector<eval::PredictionRecord> error_analysis_records();

// Writes every fixture file plus ready-to-run experiment configs
// (reproduce_<model>.json for L1, L3, S2, E1) into dir.
void write_fixtures(const std::string& dir);

}  // namespace finsent::fixtures
