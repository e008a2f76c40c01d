#include "finsent/fixtures.hpp"

#include <filesystem>
#include <sstream>

#include "finsent/common.hpp"
#include "finsent/rng.hpp"

namespace finsent::fixtures {

namespace {

struct VocabEntry {
    const char* word;
    double valence;
};

// latent valences drive the synthetic scores
constexpr VocabEntry kVocab[] = {
    {"up", 0.8},     {"gain", 0.7},  {"strong", 0.6}, {"buy", 0.5},
    {"good", 0.4},   {"rally", 0.7}, {"down", -0.8},  {"loss", -0.7},
    {"weak", -0.6},  {"sell", -0.5}, {"bad", -0.4},   {"crash", -0.9},
    {"stock", 0.0},  {"market", 0.0}, {"shares", 0.0}, {"today", 0.0},
};
constexpr std::size_t kVocabSize = sizeof(kVocab) / sizeof(kVocab[0]);
constexpr std::size_t kEmbeddingDim = 16;

}  // namespace

std::vector<corpus::SentimentInstance> synthetic_corpus() {
    RunRng rng(7);
    std::vector<corpus::SentimentInstance> out;
    for (std::size_t i = 0; i < 32; ++i) {
        const std::size_t len = 3 + rng.next_index(4);  // 3..6 tokens
        std::ostringstream text;
        double valence_sum = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
            const auto& entry = kVocab[rng.next_index(kVocabSize)];
            if (t) text << " ";
            text << entry.word;
            valence_sum += entry.valence;
        }
        corpus::SentimentInstance inst;
        char id[16];
        std::snprintf(id, sizeof(id), "syn-%03zu", i);
        inst.id = id;
        inst.text = text.str();
        const double mean_valence = valence_sum / static_cast<double>(len);
        inst.score = std::max(-0.95, std::min(0.95, 1.6 * mean_valence));
        inst.track = corpus::Track::microblog;
        out.push_back(std::move(inst));
    }
    return out;
}

corpus::EmbeddingTable synthetic_embeddings() {
    RunRng rng(11);
    corpus::EmbeddingTable table;
    table.dimension = kEmbeddingDim;
    for (const auto& entry : kVocab) {
        std::vector<double> vec(kEmbeddingDim);
        for (auto& v : vec) v = rng.next_uniform(-0.6, 0.6);
        // nudge the first component with the valence so knowledge carries signal
        vec[0] += entry.valence;
        table.entries.emplace(entry.word, std::move(vec));
    }
    return table;
}

corpus::DtTable synthetic_dt() {
    // 10 headwords, same-polarity expansion targets
    const std::vector<std::pair<const char*, std::vector<const char*>>> rows = {
        {"up", {"gain", "strong", "good", "rally"}},
        {"gain", {"up", "rally", "good", "buy"}},
        {"strong", {"good", "up", "gain", "rally"}},
        {"buy", {"good", "up", "gain", "rally"}},
        {"rally", {"up", "gain", "strong", "good"}},
        {"down", {"loss", "weak", "bad", "crash"}},
        {"loss", {"down", "crash", "bad", "weak"}},
        {"weak", {"bad", "down", "loss", "crash"}},
        {"sell", {"bad", "down", "loss", "crash"}},
        {"crash", {"down", "loss", "bad", "weak"}},
    };
    corpus::DtTable table;
    for (const auto& [word, targets] : rows) {
        double sim = 0.9;
        for (const char* target : targets) {
            table.entries[word].push_back({target, sim});
            sim -= 0.1;
        }
    }
    return table;
}

std::vector<knowledge::Triplet> toy_triplets() {
    return {
        {"gain", "similar_to", "up"},      {"strong", "similar_to", "good"},
        {"buy", "similar_to", "good"},     {"up", "similar_to", "strong"},
        {"down", "similar_to", "loss"},    {"weak", "similar_to", "bad"},
        {"sell", "similar_to", "bad"},     {"loss", "similar_to", "weak"},
        {"gain", "opposite_of", "loss"},   {"up", "opposite_of", "down"},
        {"strong", "opposite_of", "weak"}, {"buy", "opposite_of", "sell"},
    };
}

corpus::LexiconSet toy_lexicons() {
    corpus::LexiconSet set;
    corpus::Lexicon polarity;
    polarity.name = "toy-polarity";
    corpus::Lexicon valence;
    valence.name = "toy-valence";
    valence.valence_backed = true;
    for (const auto& entry : kVocab) {
        if (entry.valence > 0.0) polarity.positive.insert(entry.word);
        if (entry.valence < 0.0) polarity.negative.insert(entry.word);
        if (entry.valence != 0.0) {
            valence.valence[entry.word] = entry.valence;
            if (entry.valence > 0.0) valence.positive.insert(entry.word);
            if (entry.valence < 0.0) valence.negative.insert(entry.word);
        }
    }
    set.lexicons.push_back(std::move(polarity));
    set.lexicons.push_back(std::move(valence));
    return set;
}

std::vector<eval::PredictionRecord> error_analysis_records() {
    std::vector<eval::PredictionRecord> out;
    eval::PredictionRecord a;
    a.id = "err-1";
    a.gold = -0.946;
    a.model_predictions["E1"] = 0.042;
    a.final_prediction = 0.042;
    out.push_back(a);
    eval::PredictionRecord b;
    b.id = "err-2";
    b.gold = -0.771;
    b.model_predictions["E1"] = 0.260;
    b.final_prediction = 0.260;
    out.push_back(b);
    eval::PredictionRecord c;
    c.id = "ok-1";
    c.gold = 0.5;
    c.model_predictions["E1"] = 0.4;
    c.final_prediction = 0.4;
    out.push_back(c);
    return out;
}

namespace {

void write_embeddings_file(const std::string& path) {
    const auto table = synthetic_embeddings();
    std::ostringstream os;
    // iterate the vocab array for a stable file order
    for (const auto& entry : kVocab) {
        os << entry.word;
        for (double v : table.entries.at(entry.word)) os << " " << fmt_double(v);
        os << "\n";
    }
    io::atomic_write(path, os.str());
}

void write_dt_file(const std::string& path) {
    const auto table = synthetic_dt();
    // stable order: iterate the construction order words
    const char* order[] = {"up", "gain", "strong", "buy", "rally",
                           "down", "loss", "weak", "sell", "crash"};
    std::ostringstream os;
    for (const char* word : order) {
        for (const auto& e : table.entries.at(word)) {
            os << word << "\t" << e.target << "\t" << fmt_double(e.similarity) << "\n";
        }
    }
    io::atomic_write(path, os.str());
}

void write_triplets_file(const std::string& path) {
    std::ostringstream os;
    for (const auto& t : toy_triplets()) {
        os << t.subject << "\t" << t.relation << "\t" << t.object << "\n";
    }
    io::atomic_write(path, os.str());
}

void write_lexicon_files(const std::string& dir) {
    std::ostringstream pos, neg, val;
    for (const auto& entry : kVocab) {
        if (entry.valence > 0.0) pos << entry.word << "\n";
        if (entry.valence < 0.0) neg << entry.word << "\n";
        if (entry.valence != 0.0) {
            val << entry.word << "\t" << fmt_double(entry.valence) << "\n";
        }
    }
    io::atomic_write(dir + "/lexicon_positive.txt", pos.str());
    io::atomic_write(dir + "/lexicon_negative.txt", neg.str());
    io::atomic_write(dir + "/lexicon_valence.tsv", val.str());
}

std::string lexicon_config_json() {
    return R"([
      {"name": "toy-polarity", "kind": "polarity", "positive": "lexicon_positive.txt", "negative": "lexicon_negative.txt"},
      {"name": "toy-valence", "kind": "valence", "path": "lexicon_valence.tsv"}
    ])";
}

void write_config(const std::string& dir, const std::string& model,
                  const std::string& model_params, const std::string& train_params) {
    std::ostringstream os;
    os << "{\n"
       << "  \"model\": \"" << model << "\",\n"
       << "  \"track\": \"microblog\",\n"
       << "  \"data\": {\n"
       << "    \"train\": \"corpus_train.jsonl\",\n"
       << "    \"test\": \"corpus_train.jsonl\",\n"
       << "    \"format\": \"canonical\",\n"
       << "    \"embeddings_word2vec\": \"embeddings.txt\",\n"
       << "    \"embeddings_glove\": \"embeddings.txt\",\n"
       << "    \"dt_table\": \"dt_table.tsv\",\n"
       << "    \"triplets\": \"triplets.tsv\",\n"
       << "    \"lexicons\": " << lexicon_config_json() << "\n"
       << "  },\n"
       << "  \"model_params\": " << model_params << ",\n"
       << "  \"train\": " << train_params << ",\n"
       << "  \"knowledge\": {\"top_k\": 4, \"distmult_dim\": 8, \"distmult_epochs\": 200, "
          "\"distmult_lr\": 0.05, \"distmult_negatives\": 1},\n"
       << "  \"svr\": {\"kernel\": \"rbf\", \"c\": 1.0, \"epsilon\": 0.05, \"gamma\": 0.0, "
          "\"tol\": 0.001},\n"
       << "  \"features\": {\"max_len_percentile\": 0.95, \"standardize\": true},\n"
       << "  \"ensemble\": {\"hidden_width\": 8, \"folds\": 4, \"epochs\": 200, "
          "\"learning_rate\": 0.01}\n"
       << "}\n";
    io::atomic_write(dir + "/reproduce_" + str::lower(model) + ".json", os.str());
}

}  // namespace

void write_fixtures(const std::string& dir) {
    std::filesystem::create_directories(dir);
    corpus::save_dataset(dir + "/corpus_train.jsonl", synthetic_corpus());
    write_embeddings_file(dir + "/embeddings.txt");
    write_dt_file(dir + "/dt_table.tsv");
    write_triplets_file(dir + "/triplets.tsv");
    write_lexicon_files(dir);
    eval::write_records(dir + "/error_records.jsonl", error_analysis_records());

    // overfitting configs: no dropout, no validation split, single seed
    const std::string train_overfit =
        R"({"batch_size": 8, "epochs": 200, "seeds": [1], "learning_rate": 0.01, "val_fraction": 0.0, "patience": 0, "max_grad_norm": 5.0})";
    write_config(dir, "L3",
                 R"({"hidden_dim": 8, "context_dim": 8, "dropout": 0.0, "fuse": "sum"})",
                 train_overfit);
    // the triplet embeddings concatenate to 3*8 = 24, so the encoder needs
    // hidden size 12 for the sum fusion
    write_config(dir, "L1",
                 R"({"hidden_dim": 12, "context_dim": 8, "dropout": 0.0, "fuse": "sum"})",
                 train_overfit);
    write_config(dir, "S2",
                 R"({"hidden_dim": 8, "context_dim": 8, "dropout": 0.0, "fuse": "sum"})",
                 train_overfit);
    write_config(
        dir, "E1", R"({"hidden_dim": 8, "context_dim": 8, "dropout": 0.0, "fuse": "sum"})",
        R"({"batch_size": 8, "epochs": 60, "seeds": [1], "learning_rate": 0.01, "val_fraction": 0.0, "patience": 0, "max_grad_norm": 5.0})");
    log::info("fixtures written to " + dir);
}

}  // namespace finsent::fixtures
