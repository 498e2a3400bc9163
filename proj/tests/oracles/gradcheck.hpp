#pragma once

// Central finite-difference check of nce_loss gradients on random tiny
// instances. The forward loss is the only library call on the numeric side.

#include <cmath>
#include <random>
#include <set>

#include "impact/toy_model.hpp"

namespace impact::oracle {

struct GradInstance {
    ToyModel model;
    TrainingBatch batch;
};

struct GradCheckResult {
    bool rejected = false;
    double head_error = 0.0;
    double bias_error = 0.0;
    double embedding_error = 0.0;

    double worst() const { return std::max({head_error, bias_error, embedding_error}); }
};

inline GradInstance random_grad_instance(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t vocab = 3 + rng() % 6;
    ModelInit init;
    init.dim = 1 + rng() % 4;
    init.window = rng() % 3;
    init.embedding_range = 1.0;
    init.seed = rng();
    GradInstance inst{init_toy_model(vocab, init), {}};
    for (auto& w : inst.model.head.weights) {
        w = normal(rng);
    }
    inst.model.head.bias = 0.5 * normal(rng);

    auto passage = [&] {
        TokenSequence p;
        for (std::size_t i = 1 + rng() % 6; i > 0; --i) {
            p.ids.push_back(static_cast<token_id>(rng() % vocab));
        }
        return p;
    };
    inst.batch.positive = passage();
    for (std::size_t i = 1 + rng() % 3; i > 0; --i) {
        inst.batch.negatives.push_back(passage());
    }
    std::map<token_id, std::uint32_t> q;
    for (std::size_t i = 1 + rng() % 3; i > 0; --i) {
        // mostly tokens of the positive
        token_id t = rng() % 4 == 0 ? static_cast<token_id>(rng() % vocab)
                                    : inst.batch.positive.ids[rng() % inst.batch.positive.size()];
        ++q[t];
    }
    for (auto [t, c] : q) {
        inst.batch.query.terms.push_back({t, c});
    }
    return inst;
}

/// Pre-activations near zero (ReLU kink) or near-tied duplicate maxima
/// (max-pooling kink) make the loss non-differentiable within reach of the
/// finite-difference step.
inline bool near_kink(const GradInstance& inst, double margin = 1e-3)
{
    auto check = [&](const TokenSequence& p) {
        auto ctx = contextualize(p, inst.model.encoder);
        std::map<token_id, std::vector<double>> by_token;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double pre = inst.model.head.bias;
            for (std::size_t k = 0; k < ctx.cols; ++k) {
                pre += inst.model.head.weights[k] * ctx.row(i)[k];
            }
            if (std::fabs(pre) < margin) {
                return true;
            }
            by_token[p.ids[i]].push_back(std::max(0.0, pre));
        }
        for (auto& [t, ws] : by_token) {
            std::sort(ws.rbegin(), ws.rend());
            if (ws.size() > 1 && ws[0] > 0.0 && ws[0] - ws[1] < margin) {
                return true;
            }
        }
        return false;
    };
    if (check(inst.batch.positive)) {
        return true;
    }
    for (const auto& n : inst.batch.negatives) {
        if (check(n)) {
            return true;
        }
    }
    return false;
}

/// Norm of the difference over the larger norm, floored at `noise_floor`.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double noise_floor = 1e-6)
{
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double scale = std::max({std::sqrt(na), std::sqrt(nb), noise_floor});
    return std::sqrt(diff) / scale;
}

inline GradCheckResult check_gradients(const GradInstance& inst, double h = 1e-5)
{
    GradCheckResult result;
    if (near_kink(inst)) {
        result.rejected = true;
        return result;
    }
    Gradients analytic;
    nce_loss(inst.batch, inst.model, analytic);

    ToyModel probe = inst.model;
    auto numeric = [&](double& param) {
        double saved = param;
        param = saved + h;
        double up = nce_loss(inst.batch, probe);
        param = saved - h;
        double down = nce_loss(inst.batch, probe);
        param = saved;
        return (up - down) / (2.0 * h);
    };

    std::vector<double> head_num;
    for (auto& w : probe.head.weights) {
        head_num.push_back(numeric(w));
    }
    std::vector<double> head_an = analytic.head_weights;
    head_an.resize(head_num.size(), 0.0);
    result.head_error = relative_error(head_an, head_num);
    result.bias_error = relative_error({analytic.bias}, {numeric(probe.head.bias)});

    std::set<token_id> touched(inst.batch.positive.ids.begin(), inst.batch.positive.ids.end());
    for (const auto& n : inst.batch.negatives) {
        touched.insert(n.ids.begin(), n.ids.end());
    }
    std::vector<double> emb_num, emb_an;
    for (auto t : touched) {
        auto row = probe.encoder.row(t);
        auto it = analytic.embedding_rows.find(t);
        for (std::size_t k = 0; k < row.size(); ++k) {
            emb_num.push_back(numeric(row[k]));
            emb_an.push_back(it == analytic.embedding_rows.end() ? 0.0 : it->second[k]);
        }
    }
    result.embedding_error = relative_error(emb_an, emb_num);
    return result;
}

}  // namespace impact::oracle
