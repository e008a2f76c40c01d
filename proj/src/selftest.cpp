#include "finsent/selftest.hpp"

#include <cmath>
#include <sstream>

#include "finsent/common.hpp"
#include "finsent/kernels.hpp"
#include "finsent/model.hpp"
#include "finsent/reference.hpp"
#include "finsent/rng.hpp"
#include "finsent/svr.hpp"

namespace finsent::selftest {

namespace {

// random bound sentence for the small-configuration checks
model::BoundSentence random_sentence(RunRng& rng, const model::ModelConfig& cfg,
                                     std::size_t max_tokens, std::size_t max_terms,
                                     bool allow_empty_terms = true) {
    model::BoundSentence s;
    s.id = "check";
    s.gold = rng.next_uniform(-0.9, 0.9);
    const std::size_t t_count = 1 + rng.next_index(max_tokens);
    for (std::size_t t = 0; t < t_count; ++t) {
        model::BoundToken tok;
        tok.surface = "tok" + std::to_string(t);
        tok.embedding = ad::Tensor::zeros({cfg.embed_dim});
        for (std::size_t i = 0; i < cfg.embed_dim; ++i) {
            tok.embedding[i] = rng.next_uniform(-1.0, 1.0);
        }
        const std::size_t k =
            allow_empty_terms ? rng.next_index(max_terms + 1) : 1 + rng.next_index(max_terms);
        tok.term_count = k;
        if (k > 0) {
            tok.term_matrix = ad::Tensor::zeros({k, cfg.knowledge_dim});
            for (std::size_t i = 0; i < k * cfg.knowledge_dim; ++i) {
                tok.term_matrix[i] = rng.next_uniform(-1.0, 1.0);
            }
            for (std::size_t i = 0; i < k; ++i) {
                tok.term_labels.push_back("term" + std::to_string(i));
            }
        }
        s.tokens.push_back(std::move(tok));
    }
    return s;
}

model::ModelConfig small_config() {
    model::ModelConfig cfg;
    cfg.embed_dim = 6;
    cfg.hidden_dim = 4;
    cfg.context_dim = 5;
    cfg.knowledge_dim = 8;  // 2 * hidden
    cfg.dropout_rate = 0.0;  // gradients are checked in eval-equivalent mode
    return cfg;
}

}  // namespace

double gradient_check_once(std::uint64_t seed, double fd_step, std::size_t max_tokens,
                           std::size_t max_terms) {
    model::ModelConfig cfg = small_config();
    RunRng data_rng(seed);
    const model::BoundSentence sentence =
        random_sentence(data_rng, cfg, max_tokens, max_terms);

    model::AttentionNetwork net(cfg);
    RunRng init_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    net.init_params(init_rng);

    auto loss_value = [&]() {
        const double pred = net.predict(sentence);
        const double err = pred - sentence.gold;
        return err * err;
    };

    // analytic gradients
    net.params().zero_grads();
    ad::Tape tape;
    ad::Var score = net.build_score(tape, sentence, false, nullptr);
    ad::Var gold = tape.constant(ad::Tensor::scalar(sentence.gold));
    ad::Var err = tape.sub(score, gold);
    ad::Var sq = tape.mul(err, err);
    tape.backward(sq);

    double worst = 0.0;
    for (auto& p : net.params()) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double orig = p.value[i];
            p.value[i] = orig + fd_step;
            const double up = loss_value();
            p.value[i] = orig - fd_step;
            const double down = loss_value();
            p.value[i] = orig;
            const double numeric = (up - down) / (2.0 * fd_step);
            const double analytic = p.grad[i];
            const double denom =
                std::max({1e-10, std::fabs(numeric), std::fabs(analytic)});
            worst = std::max(worst, std::fabs(numeric - analytic) / denom);
        }
    }
    return worst;
}

double attention_sum_check(std::size_t passes, std::uint64_t seed) {
    model::ModelConfig cfg = small_config();
    model::AttentionNetwork net(cfg);
    RunRng init_rng(seed);
    net.init_params(init_rng);

    RunRng rng(seed + 1);
    double worst = 0.0;
    for (std::size_t pass = 0; pass < passes; ++pass) {
        const auto sentence = random_sentence(rng, cfg, 6, 4);
        model::AttentionRecord rec;
        net.predict(sentence, &rec);
        double total = 0.0;
        for (double w : rec.sentence_weights) {
            if (w < 0.0) worst = std::max(worst, -w);
            total += w;
        }
        worst = std::max(worst, std::fabs(total - 1.0));
        for (std::size_t t = 0; t < rec.term_weights.size(); ++t) {
            if (rec.term_weights[t].empty()) continue;
            double token_total = 0.0;
            for (double w : rec.term_weights[t]) {
                if (w < 0.0) worst = std::max(worst, -w);
                token_total += w;
            }
            worst = std::max(worst, std::fabs(token_total - 1.0));
        }
    }
    return worst;
}

double term_permutation_check(std::size_t trials, std::uint64_t seed) {
    RunRng rng(seed);
    double worst = 0.0;
    const std::size_t two_h = 8;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t k = 2 + rng.next_index(4);
        ad::Tensor terms = ad::Tensor::zeros({k, two_h});
        for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = rng.next_uniform(-1, 1);
        ad::Tensor hidden = ad::Tensor::zeros({two_h});
        for (std::size_t i = 0; i < two_h; ++i) hidden[i] = rng.next_uniform(-1, 1);
        ad::Tensor w = ad::glorot_uniform(two_h, two_h, rng);

        std::vector<std::size_t> perm(k);
        for (std::size_t i = 0; i < k; ++i) perm[i] = i;
        rng.shuffle(perm);
        ad::Tensor permuted = ad::Tensor::zeros({k, two_h});
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < two_h; ++j) {
                permuted.at(i, j) = terms.at(perm[i], j);
            }
        }

        auto knowledge_vec = [&](const ad::Tensor& mat) {
            ad::Tape tape;
            auto [m, alpha] = model::word_attention(tape, tape.constant(hidden),
                                                    tape.constant(mat), tape.constant(w));
            (void)alpha;
            return tape.value(m);
        };
        const ad::Tensor a = knowledge_vec(terms);
        const ad::Tensor b = knowledge_vec(permuted);
        for (std::size_t i = 0; i < two_h; ++i) {
            worst = std::max(worst, std::fabs(a[i] - b[i]));
        }
    }
    return worst;
}

bool empty_knowledge_matches_disabled(std::size_t sentences, std::uint64_t seed) {
    model::ModelConfig with = small_config();
    model::ModelConfig without = small_config();
    without.use_knowledge = false;

    model::AttentionNetwork net_with(with);
    model::AttentionNetwork net_without(without);
    RunRng rng_a(seed), rng_b(seed);
    net_with.init_params(rng_a);
    net_without.init_params(rng_b);

    RunRng rng(seed + 7);
    for (std::size_t i = 0; i < sentences; ++i) {
        auto sentence = random_sentence(rng, with, 6, 3);
        for (auto& tok : sentence.tokens) {  // strip all knowledge
            tok.term_count = 0;
            tok.term_matrix = ad::Tensor();
            tok.term_labels.clear();
        }
        const double a = net_with.predict(sentence);
        const double b = net_without.predict(sentence);
        if (a != b) return false;  // bitwise comparison
    }
    return true;
}

SvrAgreement svr_oracle_check(std::size_t datasets, std::uint64_t seed) {
    RunRng rng(seed);
    SvrAgreement agg;
    for (std::size_t d = 0; d < datasets; ++d) {
        const std::size_t n = 4 + rng.next_index(7);  // 4..10 points
        const std::size_t dim = 1 + rng.next_index(3);
        std::vector<std::vector<double>> x(n, std::vector<double>(dim));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < dim; ++k) x[i][k] = rng.next_uniform(-1, 1);
            y[i] = rng.next_uniform(-1, 1);
        }
        svr::SvrConfig cfg;
        cfg.kernel = d % 2 == 0 ? svr::KernelKind::linear : svr::KernelKind::rbf;
        cfg.c = 1.0 + rng.next_uniform() * 2.0;
        cfg.epsilon = 0.05 + rng.next_uniform() * 0.1;
        cfg.tol = 1e-6;

        const auto sol = svr::solve_svr_dual(x, y, cfg);
        const auto ref = reference::svr_reference_solve(x, y, cfg, 400000);

        for (double coef : sol.coefficients) {
            agg.max_box_violation =
                std::max(agg.max_box_violation, std::fabs(coef) - cfg.c);
        }
        double balance = 0.0;
        for (double coef : sol.coefficients) balance += coef;
        agg.max_balance_violation = std::max(agg.max_balance_violation, std::fabs(balance));

        svr::SvrModel m;
        m.kernel = cfg.kernel;
        m.gamma = cfg.kernel == svr::KernelKind::rbf ? 1.0 / static_cast<double>(dim) : 0.0;
        m.feature_dim = dim;
        m.bias = sol.bias;
        for (std::size_t i = 0; i < n; ++i) {
            m.support_vectors.push_back(x[i]);
            m.coefficients.push_back(sol.coefficients[i]);
        }
        for (std::size_t probe = 0; probe < n + 5; ++probe) {
            std::vector<double> q(dim);
            if (probe < n) {
                q = x[probe];
            } else {
                for (auto& v : q) v = rng.next_uniform(-1, 1);
            }
            const double mine = m.predict(q);
            const double theirs = reference::svr_reference_predict(ref, x, cfg, dim, q);
            agg.max_prediction_gap =
                std::max(agg.max_prediction_gap, std::fabs(mine - theirs));
        }
    }
    return agg;
}

std::vector<CheckResult> run_all() {
    std::vector<CheckResult> results;

    {
        CheckResult r{"kernel-dispatch", true, ""};
        std::ostringstream os;
        os << "active " << kern::isa_name(kern::active_isa());
        if (kern::best_supported() == kern::Isa::avx2) {
            const auto& s = kern::table_for(kern::Isa::scalar);
            const auto& v = kern::table_for(kern::Isa::avx2);
            RunRng rng(3);
            double worst = 0.0;
            std::vector<double> a(257), b(257);
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = rng.next_uniform(-2, 2);
                b[i] = rng.next_uniform(-2, 2);
            }
            const double ds = s.dot(a.data(), b.data(), a.size());
            const double dv = v.dot(a.data(), b.data(), a.size());
            worst = std::max(worst, std::fabs(ds - dv));
            std::vector<double> ts(a.size()), tv(a.size());
            s.vtanh(a.data(), ts.data(), a.size());
            v.vtanh(a.data(), tv.data(), a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                worst = std::max(worst, std::fabs(ts[i] - tv[i]));
            }
            r.pass = worst < 1e-12;
            os << ", scalar/avx2 max gap " << fmt_double(worst);
        } else {
            os << " (no simd variant on this machine)";
        }
        r.detail = os.str();
        results.push_back(r);
    }

    {
        CheckResult r{"gradient-check", true, ""};
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            worst = std::max(worst, gradient_check_once(seed, 1e-5));
        }
        r.pass = worst < 1e-4;
        r.detail = "max relative error " + fmt_double(worst) + " over 3 configurations";
        results.push_back(r);
    }

    {
        CheckResult r{"attention-invariants", true, ""};
        const double sum_dev = attention_sum_check(100, 5);
        const double perm_dev = term_permutation_check(50, 6);
        const bool bitwise = empty_knowledge_matches_disabled(25, 8);
        r.pass = sum_dev < 1e-9 && perm_dev < 1e-12 && bitwise;
        r.detail = "weight-sum deviation " + fmt_double(sum_dev) + ", permutation drift " +
                   fmt_double(perm_dev) + ", empty-knowledge bitwise " +
                   (bitwise ? "yes" : "NO");
        results.push_back(r);
    }

    {
        CheckResult r{"svr-reference-agreement", true, ""};
        const auto agg = svr_oracle_check(4, 12);
        r.pass = agg.max_prediction_gap < 1e-3 && agg.max_box_violation <= 1e-6 &&
                 agg.max_balance_violation < 1e-6;
        r.detail = "prediction gap " + fmt_double(agg.max_prediction_gap) +
                   ", box violation " + fmt_double(agg.max_box_violation) +
                   ", balance " + fmt_double(agg.max_balance_violation);
        results.push_back(r);
    }

    return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

}  // namespace finsent::selftest
