#include "finsent/knowledge.hpp"

#include <cmath>
#include <sstream>

#include "finsent/common.hpp"
#include "finsent/kernels.hpp"

namespace finsent::knowledge {

std::vector<Triplet> load_triplets(const std::string& path) {
    std::vector<Triplet> out;
    std::size_t lineno = 0;
    for (const auto& line : io::read_lines(path)) {
        ++lineno;
        if (str::trim(line).empty()) continue;
        const auto parts = str::split(line, '\t');
        if (parts.size() != 3) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected subject<TAB>relation<TAB>object");
        }
        out.push_back({str::lower(str::trim(parts[0])), str::lower(str::trim(parts[1])),
                       str::lower(str::trim(parts[2]))});
    }
    log::info(path + ": loaded " + std::to_string(out.size()) + " triplets");
    return out;
}

bool DistMultModel::has_entity(const std::string& name) const {
    return entity_ids_.count(name) != 0;
}

bool DistMultModel::has_relation(const std::string& name) const {
    return relation_ids_.count(name) != 0;
}

const std::vector<double>& DistMultModel::entity_vec(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end()) throw ValidationError("unknown entity '" + name + "'");
    return entities_[it->second];
}

const std::vector<double>& DistMultModel::relation_vec(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) throw ValidationError("unknown relation '" + name + "'");
    return relations_[it->second];
}

std::vector<std::string> DistMultModel::entity_names() const { return entity_order_; }

double DistMultModel::score(const std::string& subject, const std::string& relation,
                            const std::string& object) const {
    const auto& s = entity_vec(subject);
    const auto& r = relation_vec(relation);
    const auto& o = entity_vec(object);
    double acc = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) acc += s[k] * r[k] * o[k];
    return acc;
}

void DistMultModel::save(const std::string& path) const {
    std::ostringstream os;
    os << "distmult v1 " << dim_ << "\n";
    for (std::size_t i = 0; i < entity_order_.size(); ++i) {
        os << "entity " << entity_order_[i];
        for (double v : entities_[i]) os << " " << fmt_double(v);
        os << "\n";
    }
    for (std::size_t i = 0; i < relation_order_.size(); ++i) {
        os << "relation " << relation_order_[i];
        for (double v : relations_[i]) os << " " << fmt_double(v);
        os << "\n";
    }
    io::atomic_write(path, os.str());
}

DistMultModel DistMultModel::load(const std::string& path) {
    const auto lines = io::read_lines(path);
    if (lines.empty()) throw ValidationError(path + ": empty model file");
    const auto header = str::split_ws(lines[0]);
    if (header.size() != 3 || header[0] != "distmult" || header[1] != "v1") {
        throw ValidationError(path + ": bad header '" + lines[0] + "'");
    }
    DistMultModel m;
    m.dim_ = static_cast<std::size_t>(std::stoul(header[2]));
    for (std::size_t lineno = 1; lineno < lines.size(); ++lineno) {
        if (str::trim(lines[lineno]).empty()) continue;
        const auto parts = str::split_ws(lines[lineno]);
        if (parts.size() != m.dim_ + 2) {
            throw ValidationError(path + ":" + std::to_string(lineno + 1) +
                                  ": expected kind, name and " + std::to_string(m.dim_) +
                                  " values");
        }
        std::vector<double> vec(m.dim_);
        for (std::size_t k = 0; k < m.dim_; ++k) vec[k] = std::stod(parts[k + 2]);
        if (parts[0] == "entity") {
            m.entity_ids_.emplace(parts[1], m.entities_.size());
            m.entity_order_.push_back(parts[1]);
            m.entities_.push_back(std::move(vec));
        } else if (parts[0] == "relation") {
            m.relation_ids_.emplace(parts[1], m.relations_.size());
            m.relation_order_.push_back(parts[1]);
            m.relations_.push_back(std::move(vec));
        } else {
            throw ValidationError(path + ":" + std::to_string(lineno + 1) +
                                  ": unknown row kind '" + parts[0] + "'");
        }
    }
    return m;
}

namespace {

double softplus(double x) {
    // stable: log(1 + e^x)
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    const double e = std::exp(-std::fabs(x));
    return (x >= 0.0 ? 1.0 : e) / (1.0 + e);
}

}  // namespace

struct DistMultTrainer {
    static DistMultTrainResult run(const std::vector<Triplet>& triplets,
                                   const DistMultTrainConfig& cfg) {
        if (triplets.empty()) throw ValidationError("train_distmult: empty triplet set");
        if (cfg.dim == 0) throw ValidationError("train_distmult: dim must be >= 1");

        DistMultModel m;
        m.dim_ = cfg.dim;
        // register ids in first-appearance order (also the init draw order)
        for (const auto& t : triplets) {
            for (const std::string* name : {&t.subject, &t.object}) {
                if (!m.entity_ids_.count(*name)) {
                    m.entity_ids_.emplace(*name, m.entities_.size());
                    m.entity_order_.push_back(*name);
                    m.entities_.emplace_back();
                }
            }
            if (!m.relation_ids_.count(t.relation)) {
                m.relation_ids_.emplace(t.relation, m.relations_.size());
                m.relation_order_.push_back(t.relation);
                m.relations_.emplace_back();
            }
        }

        RunRng rng(cfg.seed);
        const double limit = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
        for (auto& e : m.entities_) {
            e.resize(cfg.dim);
            for (auto& v : e) v = rng.next_uniform(-limit, limit);
        }
        for (auto& r : m.relations_) {
            r.resize(cfg.dim);
            for (auto& v : r) v = rng.next_uniform(-limit, limit);
        }

        const std::size_t n_entities = m.entities_.size();
        std::vector<std::size_t> subj(triplets.size()), rel(triplets.size()),
            obj(triplets.size());
        for (std::size_t i = 0; i < triplets.size(); ++i) {
            subj[i] = m.entity_ids_.at(triplets[i].subject);
            rel[i] = m.relation_ids_.at(triplets[i].relation);
            obj[i] = m.entity_ids_.at(triplets[i].object);
        }

        std::vector<std::size_t> order(triplets.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        DistMultTrainResult result;
        const std::size_t d = cfg.dim;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(order);
            double epoch_loss = 0.0;
            std::size_t n_terms = 0;
            for (std::size_t idx : order) {
                // positive plus corrupted negatives, label y = +1 / -1
                for (std::size_t neg = 0; neg <= cfg.negatives_per_positive; ++neg) {
                    std::size_t si = subj[idx], oi = obj[idx];
                    double label = 1.0;
                    if (neg > 0) {
                        label = -1.0;
                        const bool corrupt_subject = rng.next_bernoulli(0.5);
                        std::size_t& slot = corrupt_subject ? si : oi;
                        const std::size_t original = slot;
                        if (n_entities > 1) {
                            do {
                                slot = rng.next_index(n_entities);
                            } while (slot == original);
                        }
                    }
                    auto& es = m.entities_[si];
                    auto& wr = m.relations_[rel[idx]];
                    auto& eo = m.entities_[oi];
                    double score = 0.0;
                    for (std::size_t k = 0; k < d; ++k) score += es[k] * wr[k] * eo[k];
                    epoch_loss += softplus(-label * score);
                    ++n_terms;
                    // d/ds softplus(-y s) = -y * sigmoid(-y s)
                    const double coef = -label * sigmoid(-label * score);
                    const double step = cfg.learning_rate * coef;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double gs = wr[k] * eo[k];
                        const double gr = es[k] * eo[k];
                        const double go = es[k] * wr[k];
                        es[k] -= step * gs;
                        wr[k] -= step * gr;
                        eo[k] -= step * go;
                    }
                }
            }
            result.epoch_loss.push_back(epoch_loss / static_cast<double>(n_terms));
        }
        result.model = std::move(m);
        return result;
    }
};

DistMultTrainResult train_distmult(const std::vector<Triplet>& triplets,
                                   const DistMultTrainConfig& cfg) {
    return DistMultTrainer::run(triplets, cfg);
}

RelevantTermSet kg_relevant_terms(const std::string& token,
                                  const std::vector<Triplet>& triplets,
                                  const DistMultModel& model) {
    RelevantTermSet set;
    set.source = TermSource::kg;
    for (const auto& t : triplets) {
        if (t.subject != token) continue;
        RelevantTerm term;
        term.label = t.relation + ":" + t.object;
        term.embedding.reserve(3 * model.dim());
        for (const auto* vec :
             {&model.entity_vec(t.subject), &model.relation_vec(t.relation),
              &model.entity_vec(t.object)}) {
            term.embedding.insert(term.embedding.end(), vec->begin(), vec->end());
        }
        set.terms.push_back(std::move(term));
    }
    return set;
}

RelevantTermSet dt_relevant_terms(const std::string& token, const corpus::DtTable& dt,
                                  const corpus::EmbeddingTable& embeddings,
                                  std::size_t k) {
    RelevantTermSet set;
    set.source = TermSource::dt;
    const auto* row = dt.find(token);
    if (!row) return set;
    for (const auto& entry : *row) {
        if (set.terms.size() >= k) break;
        const auto* vec = embeddings.find(entry.target);
        if (!vec) continue;
        set.terms.push_back({entry.target, *vec});
    }
    return set;
}

KgKnowledge::KgKnowledge(std::vector<Triplet> triplets, DistMultModel model)
    : triplets_(std::move(triplets)), model_(std::move(model)) {
    for (std::size_t i = 0; i < triplets_.size(); ++i) {
        by_subject_[triplets_[i].subject].push_back(i);
    }
}

RelevantTermSet KgKnowledge::relevant_terms(const std::string& token) const {
    RelevantTermSet set;
    set.source = TermSource::kg;
    auto it = by_subject_.find(token);
    if (it == by_subject_.end()) return set;
    for (std::size_t idx : it->second) {
        const auto& t = triplets_[idx];
        if (!model_.has_entity(t.subject) || !model_.has_relation(t.relation) ||
            !model_.has_entity(t.object)) {
            continue;
        }
        RelevantTerm term;
        term.label = t.relation + ":" + t.object;
        term.embedding.reserve(term_dim());
        for (const auto* vec :
             {&model_.entity_vec(t.subject), &model_.relation_vec(t.relation),
              &model_.entity_vec(t.object)}) {
            term.embedding.insert(term.embedding.end(), vec->begin(), vec->end());
        }
        set.terms.push_back(std::move(term));
    }
    return set;
}

DtKnowledge::DtKnowledge(const corpus::DtTable* table,
                         const corpus::EmbeddingTable* embeddings, std::size_t k)
    : table_(table), embeddings_(embeddings), k_(k) {
    if (k_ == 0) throw ValidationError("DtKnowledge: k must be >= 1");
}

RelevantTermSet DtKnowledge::relevant_terms(const std::string& token) const {
    return dt_relevant_terms(token, *table_, *embeddings_, k_);
}

}  // namespace finsent::knowledge
