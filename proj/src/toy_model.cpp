#include "impact/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "binary_io.hpp"
#include "impact/error.hpp"

namespace impact {

namespace {

constexpr char toy_magic[4] = {'T', 'O', 'Y', 'W'};
constexpr std::uint32_t toy_version = 1;

struct CollapsedWeight {
    token_id token;
    double weight;
    std::size_t position;  // first position attaining the max
};

struct PassageForward {
    ContextMatrix ctx;
    std::vector<double> pre;
    std::vector<CollapsedWeight> collapsed;
};

PassageForward forward(const TokenSequence& passage, const ToyModel& model)
{
    PassageForward fw;
    fw.ctx = contextualize(passage, model.encoder);
    const auto& w = model.head.weights;
    fw.pre.resize(passage.size());
    for (std::size_t i = 0; i < passage.size(); ++i) {
        auto row = fw.ctx.row(i);
        fw.pre[i] = std::inner_product(row.begin(), row.end(), w.begin(), 0.0) + model.head.bias;
    }

    std::vector<std::size_t> order(passage.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return passage.ids[a] < passage.ids[b]; });
    for (auto pos : order) {
        double v = std::max(0.0, fw.pre[pos]);
        if (!fw.collapsed.empty() && fw.collapsed.back().token == passage.ids[pos]) {
            if (v > fw.collapsed.back().weight) {
                fw.collapsed.back().weight = v;
                fw.collapsed.back().position = pos;
            }
        } else {
            fw.collapsed.push_back({passage.ids[pos], v, pos});
        }
    }
    return fw;
}

template <typename Visit>
double match(const SparseTermVector& query, const std::vector<CollapsedWeight>& collapsed, Visit&& visit)
{
    double total = 0.0;
    auto it = collapsed.begin();
    for (const auto& term : query.terms) {
        it = std::lower_bound(it, collapsed.end(), term.token,
                              [](const CollapsedWeight& c, token_id t) { return c.token < t; });
        if (it == collapsed.end()) {
            break;
        }
        if (it->token == term.token) {
            total += static_cast<double>(term.count) * it->weight;
            visit(term.count, it->position);
        }
    }
    return total;
}

struct QuerySpec {
    const SparseTermVector* query;
    std::size_t positive;
    std::vector<std::size_t> negatives;
};

/// Sum of per-query losses; when `grad` is set, accumulates scale * dL/dtheta.
double loss_and_gradient(std::span<const TokenSequence* const> passages, std::span<const QuerySpec> queries,
                         const ToyModel& model, Gradients* grad, double scale)
{
    std::vector<PassageForward> fw;
    fw.reserve(passages.size());
    for (const auto* p : passages) {
        fw.push_back(forward(*p, model));
    }
    std::vector<std::vector<double>> dv;
    if (grad != nullptr) {
        dv.resize(passages.size());
        for (std::size_t i = 0; i < passages.size(); ++i) {
            dv[i].assign(passages[i]->size(), 0.0);
        }
    }

    auto noop = [](std::uint32_t, std::size_t) {};
    double total = 0.0;
    std::vector<std::size_t> items;
    std::vector<double> scores;
    for (const auto& q : queries) {
        if (q.negatives.empty()) {
            throw error(errc::invalid_argument, "NCE loss needs at least one negative passage");
        }
        items.clear();
        items.push_back(q.positive);
        items.insert(items.end(), q.negatives.begin(), q.negatives.end());
        scores.clear();
        for (auto idx : items) {
            scores.push_back(match(*q.query, fw[idx].collapsed, noop));
        }
        double top = *std::max_element(scores.begin(), scores.end());
        double z = 0.0;
        for (double s : scores) {
            z += std::exp(s - top);
        }
        total += std::log(z) + top - scores.front();

        if (grad != nullptr) {
            for (std::size_t x = 0; x < items.size(); ++x) {
                double g = std::exp(scores[x] - top) / z - (x == 0 ? 1.0 : 0.0);
                auto& d = dv[items[x]];
                match(*q.query, fw[items[x]].collapsed,
                      [&](std::uint32_t count, std::size_t pos) { d[pos] += scale * g * count; });
            }
        }
    }

    if (grad == nullptr) {
        return total;
    }
    const std::size_t dim = model.encoder.dim;
    const std::size_t window = model.encoder.window;
    const auto& w = model.head.weights;
    if (grad->head_weights.size() != dim) {
        grad->head_weights.assign(dim, 0.0);
    }
    for (std::size_t p = 0; p < passages.size(); ++p) {
        const auto& ids = passages[p]->ids;
        for (std::size_t j = 0; j < ids.size(); ++j) {
            double d = dv[p][j];
            if (d == 0.0 || fw[p].pre[j] <= 0.0) {
                continue;
            }
            auto ctx = fw[p].ctx.row(j);
            for (std::size_t k = 0; k < dim; ++k) {
                grad->head_weights[k] += d * ctx[k];
            }
            grad->bias += d;
            std::size_t lo = j >= window ? j - window : 0;
            std::size_t hi = std::min(ids.size() - 1, j + window);
            double share = d / static_cast<double>(hi - lo + 1);
            for (std::size_t u = lo; u <= hi; ++u) {
                auto& row = grad->embedding_rows[ids[u]];
                if (row.empty()) {
                    row.assign(dim, 0.0);
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    row[k] += share * w[k];
                }
            }
        }
    }
    return total;
}

double batch_loss(const TrainingBatch& batch, const ToyModel& model, Gradients* grad)
{
    std::vector<const TokenSequence*> passages;
    passages.push_back(&batch.positive);
    QuerySpec spec{&batch.query, 0, {}};
    for (const auto& neg : batch.negatives) {
        spec.negatives.push_back(passages.size());
        passages.push_back(&neg);
    }
    return loss_and_gradient(passages, std::span(&spec, 1), model, grad, 1.0);
}

void check_model(const ToyModel& model)
{
    const auto& enc = model.encoder;
    if (enc.dim == 0 || enc.embeddings.size() != enc.vocab_size * enc.dim || model.head.weights.size() != enc.dim) {
        throw error(errc::invalid_argument, "toy model shapes are inconsistent");
    }
}

}  // namespace

ToyModel init_toy_model(std::size_t vocab_size, const ModelInit& init)
{
    if (init.dim == 0 || vocab_size == 0) {
        throw error(errc::invalid_argument, "toy model needs dim >= 1 and a non-empty vocabulary");
    }
    ToyModel model;
    model.encoder.vocab_size = vocab_size;
    model.encoder.dim = init.dim;
    model.encoder.window = init.window;
    model.encoder.embeddings.resize(vocab_size * init.dim);
    std::mt19937_64 rng(init.seed);
    std::uniform_real_distribution<double> dist(-init.embedding_range, init.embedding_range);
    for (auto& x : model.encoder.embeddings) {
        x = dist(rng);
    }
    model.head.weights.assign(init.dim, 0.0);
    model.head.bias = init.bias;
    return model;
}

ContextMatrix contextualize(const TokenSequence& passage, const ToyContextualizer& encoder)
{
    if (passage.empty()) {
        throw error(errc::invalid_argument, "cannot contextualize an empty passage");
    }
    for (auto id : passage.ids) {
        if (id >= encoder.vocab_size) {
            throw error(errc::invalid_argument, "token id " + std::to_string(id) + " outside model vocabulary");
        }
    }
    const std::size_t n = passage.size();
    ContextMatrix out{n, encoder.dim, std::vector<double>(n * encoder.dim, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= encoder.window ? i - encoder.window : 0;
        std::size_t hi = std::min(n - 1, i + encoder.window);
        double* dst = out.data.data() + i * encoder.dim;
        for (std::size_t u = lo; u <= hi; ++u) {
            auto row = encoder.row(passage.ids[u]);
            for (std::size_t k = 0; k < encoder.dim; ++k) {
                dst[k] += row[k];
            }
        }
        if (hi > lo) {
            double count = static_cast<double>(hi - lo + 1);
            for (std::size_t k = 0; k < encoder.dim; ++k) {
                dst[k] /= count;
            }
        }
    }
    return out;
}

std::vector<TokenWeight> term_weights(const TokenSequence& passage, const ToyModel& model)
{
    check_model(model);
    auto ctx = contextualize(passage, model.encoder);
    std::vector<TokenWeight> out;
    out.reserve(passage.size());
    for (std::size_t i = 0; i < passage.size(); ++i) {
        auto row = ctx.row(i);
        double pre = std::inner_product(row.begin(), row.end(), model.head.weights.begin(), 0.0) + model.head.bias;
        out.emplace_back(passage.ids[i], static_cast<float>(std::max(0.0, pre)));
    }
    return out;
}

double passage_score(const SparseTermVector& query, const TokenSequence& passage, const ToyModel& model)
{
    check_model(model);
    return match(query, forward(passage, model).collapsed, [](std::uint32_t, std::size_t) {});
}

double nce_loss(const TrainingBatch& batch, const ToyModel& model)
{
    check_model(model);
    return batch_loss(batch, model, nullptr);
}

double nce_loss(const TrainingBatch& batch, const ToyModel& model, Gradients& grad)
{
    check_model(model);
    return batch_loss(batch, model, &grad);
}

TrainResult train(std::span<const TokenSequence> corpus, std::span<const TrainingExample> examples,
                  const TrainConfig& config, std::size_t vocab_size)
{
    return train(init_toy_model(vocab_size, config.init), corpus, examples, config);
}

TrainResult train(ToyModel model, std::span<const TokenSequence> corpus, std::span<const TrainingExample> examples,
                  const TrainConfig& config)
{
    check_model(model);
    if (examples.empty()) {
        throw error(errc::empty_dataset, "no training examples");
    }
    if (config.batch_size == 0) {
        throw error(errc::invalid_argument, "batch size must be at least 1");
    }
    for (const auto& ex : examples) {
        if (ex.positive >= corpus.size()
            || std::any_of(ex.hard_negatives.begin(), ex.hard_negatives.end(),
                           [&](std::size_t i) { return i >= corpus.size(); })) {
            throw error(errc::invalid_argument, "training example refers to a passage outside the corpus");
        }
    }

    const std::size_t dim = model.encoder.dim;
    const std::size_t batch = std::min(config.batch_size, examples.size());
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    std::vector<double> vel_head(dim, 0.0);
    double vel_bias = 0.0;
    std::vector<double> vel_emb;
    if (config.momentum != 0.0) {
        vel_emb.assign(model.encoder.embeddings.size(), 0.0);
    }

    TrainResult result;
    result.log.loss.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
        std::vector<std::size_t> picked;
        while (picked.size() < batch) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            picked.push_back(order[cursor++]);
        }

        // hard negatives drawn without replacement when enough are available
        std::vector<std::vector<std::size_t>> hard(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto& pool = examples[picked[i]].hard_negatives;
            if (pool.empty() || config.hard_negatives == 0) {
                continue;
            }
            if (pool.size() >= config.hard_negatives) {
                std::vector<std::size_t> tmp(pool.begin(), pool.end());
                for (std::size_t k = 0; k < config.hard_negatives; ++k) {
                    std::uniform_int_distribution<std::size_t> pick(k, tmp.size() - 1);
                    std::swap(tmp[k], tmp[pick(rng)]);
                }
                hard[i].assign(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(config.hard_negatives));
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
                for (std::size_t k = 0; k < config.hard_negatives; ++k) {
                    hard[i].push_back(pool[pick(rng)]);
                }
            }
        }

        std::vector<const TokenSequence*> passages;
        std::unordered_map<std::size_t, std::size_t> local;
        auto slot = [&](std::size_t corpus_idx) {
            auto [it, inserted] = local.emplace(corpus_idx, passages.size());
            if (inserted) {
                passages.push_back(&corpus[corpus_idx]);
            }
            return it->second;
        };
        std::vector<QuerySpec> specs;
        for (std::size_t i = 0; i < batch; ++i) {
            const auto& ex = examples[picked[i]];
            QuerySpec spec{&ex.query, slot(ex.positive), {}};
            auto add_negative = [&](std::size_t corpus_idx) {
                if (corpus_idx != ex.positive) {
                    spec.negatives.push_back(slot(corpus_idx));
                }
            };
            for (auto idx : hard[i]) {
                add_negative(idx);
            }
            for (std::size_t j = 0; j < batch; ++j) {
                if (j == i) {
                    continue;
                }
                add_negative(examples[picked[j]].positive);
                for (auto idx : hard[j]) {
                    add_negative(idx);
                }
            }
            specs.push_back(std::move(spec));
        }

        Gradients grad;
        grad.head_weights.assign(dim, 0.0);
        const double scale = 1.0 / static_cast<double>(batch);
        double loss = loss_and_gradient(passages, specs, model, &grad, scale) * scale;
        if (!std::isfinite(loss)) {
            throw error(errc::non_finite, "loss became " + std::to_string(loss) + " at step " + std::to_string(step)
                                              + " (bias " + std::to_string(model.head.bias) + ")");
        }
        result.log.loss.push_back(loss);
        result.log.negatives_per_query.push_back(specs.front().negatives.size());

        const double lr = config.learning_rate;
        const double mu = config.momentum;
        for (std::size_t k = 0; k < dim; ++k) {
            vel_head[k] = mu * vel_head[k] + grad.head_weights[k];
            model.head.weights[k] -= lr * vel_head[k];
        }
        vel_bias = mu * vel_bias + grad.bias;
        model.head.bias -= lr * vel_bias;
        if (mu != 0.0) {
            for (auto& [token, g] : grad.embedding_rows) {
                auto row = model.encoder.row(token);
                double* vel = vel_emb.data() + std::size_t{token} * dim;
                for (std::size_t k = 0; k < dim; ++k) {
                    vel[k] = mu * vel[k] + g[k];
                    row[k] -= lr * vel[k];
                }
            }
        } else {
            for (auto& [token, g] : grad.embedding_rows) {
                auto row = model.encoder.row(token);
                for (std::size_t k = 0; k < dim; ++k) {
                    row[k] -= lr * g[k];
                }
            }
        }
    }
    result.model = std::move(model);
    return result;
}

std::string serialize(const ToyModel& model)
{
    check_model(model);
    detail::ByteWriter w;
    w.put_bytes(std::string_view(toy_magic, 4));
    w.put<std::uint32_t>(toy_version);
    w.put<std::uint64_t>(model.encoder.vocab_size);
    w.put<std::uint64_t>(model.encoder.dim);
    w.put<std::uint64_t>(model.encoder.window);
    for (double x : model.encoder.embeddings) {
        w.put<double>(x);
    }
    for (double x : model.head.weights) {
        w.put<double>(x);
    }
    w.put<double>(model.head.bias);
    return w.release();
}

ToyModel deserialize_toy_model(std::string_view bytes)
{
    detail::ByteReader r(bytes, errc::parse);
    if (r.get_bytes(4) != std::string_view(toy_magic, 4)) {
        throw error(errc::parse, "not a toy model file");
    }
    if (auto version = r.get<std::uint32_t>(); version != toy_version) {
        throw error(errc::version_mismatch, "unsupported toy model version " + std::to_string(version));
    }
    ToyModel model;
    model.encoder.vocab_size = r.get<std::uint64_t>();
    model.encoder.dim = r.get<std::uint64_t>();
    model.encoder.window = r.get<std::uint64_t>();
    const auto cells = model.encoder.vocab_size * model.encoder.dim;
    if (model.encoder.dim == 0 || r.remaining() != (cells + model.encoder.dim + 1) * sizeof(double)) {
        throw error(errc::parse, "toy model file size does not match its header");
    }
    model.encoder.embeddings.resize(cells);
    for (auto& x : model.encoder.embeddings) {
        x = r.get<double>();
    }
    model.head.weights.resize(model.encoder.dim);
    for (auto& x : model.head.weights) {
        x = r.get<double>();
    }
    model.head.bias = r.get<double>();
    return model;
}

void save(const ToyModel& model, const std::filesystem::path& path)
{
    detail::write_file(path, serialize(model));
}

ToyModel load_toy_model(const std::filesystem::path& path)
{
    return deserialize_toy_model(detail::read_file(path));
}

}  // namespace impact
