#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "impact/impact_index.hpp"
#include "impact/query_encoder.hpp"
#include "impact/types.hpp"

namespace impact {

/// Static embedding table plus a symmetric averaging window. Position i of a
/// passage is represented by the mean embedding over tokens [i - w, i + w]
/// clipped to the passage, so the same token gets different vectors in
/// different contexts.
struct ToyContextualizer {
    std::size_t vocab_size = 0;
    std::size_t dim = 0;
    std::size_t window = 0;
    std::vector<double> embeddings;  // vocab_size x dim, row-major

    std::span<const double> row(token_id id) const { return {embeddings.data() + std::size_t{id} * dim, dim}; }
    std::span<double> row(token_id id) { return {embeddings.data() + std::size_t{id} * dim, dim}; }
    bool operator==(const ToyContextualizer&) const = default;
};

/// 1 x n projection and bias, followed by ReLU.
struct ProjectionHead {
    std::vector<double> weights;
    double bias = 0.0;

    bool operator==(const ProjectionHead&) const = default;
};

struct ToyModel {
    ToyContextualizer encoder;
    ProjectionHead head;

    bool operator==(const ToyModel&) const = default;
};

struct ModelInit {
    std::size_t dim = 16;
    std::size_t window = 1;
    double embedding_range = 0.1;  // uniform(-r, r)
    double bias = 0.5;
    std::uint64_t seed = 42;
};

ToyModel init_toy_model(std::size_t vocab_size, const ModelInit& init);

/// Row-major passage_length x dim.
struct ContextMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Throws InvalidArgument for an empty passage or out-of-vocabulary ids.
ContextMatrix contextualize(const TokenSequence& passage, const ToyContextualizer& encoder);

/// One weight per position: ReLU(w . ctx_i + b). No max-collapse here.
std::vector<TokenWeight> term_weights(const TokenSequence& passage, const ToyModel& model);

/// Eq.-2-style score of a passage computed from its max-collapsed weights.
double passage_score(const SparseTermVector& query, const TokenSequence& passage, const ToyModel& model);

struct TrainingBatch {
    SparseTermVector query;
    TokenSequence positive;
    std::vector<TokenSequence> negatives;
};

/// Sparse gradient of the loss. Embedding rows appear only when touched.
struct Gradients {
    std::vector<double> head_weights;
    double bias = 0.0;
    std::map<token_id, std::vector<double>> embedding_rows;
};

/// -log softmax of the positive score against the negatives, evaluated with
/// log-sum-exp. Throws InvalidArgument when there are no negatives.
double nce_loss(const TrainingBatch& batch, const ToyModel& model);
double nce_loss(const TrainingBatch& batch, const ToyModel& model, Gradients& grad);

struct TrainConfig {
    std::size_t steps = 500;
    double learning_rate = 0.05;
    double momentum = 0.0;
    std::size_t batch_size = 8;
    std::size_t hard_negatives = 7;
    std::uint64_t seed = 42;
    ModelInit init;
};

/// Passages are referenced by index into the training corpus.
struct TrainingExample {
    SparseTermVector query;
    std::size_t positive = 0;
    std::vector<std::size_t> hard_negatives;
};

struct TrainingLog {
    std::vector<double> loss;  // mean batch loss per step
    std::vector<std::size_t> negatives_per_query;  // |l| of the first query, per step
};

struct TrainResult {
    ToyModel model;
    TrainingLog log;
};

/// Size of each query's negative set with in-batch sharing: its own hard
/// negatives plus every other query's positive and hard negatives.
constexpr std::size_t in_batch_negative_count(std::size_t batch, std::size_t hard) noexcept
{
    return hard + (batch - 1) * (hard + 1);
}

/// SGD (optionally with momentum) on the mean NCE loss of each batch.
/// Throws EmptyDataset, InvalidArgument, or NonFinite when a step's loss blows up.
TrainResult train(std::span<const TokenSequence> corpus, std::span<const TrainingExample> examples,
                  const TrainConfig& config, std::size_t vocab_size);
/// Continues from an existing model instead of a fresh initialization.
TrainResult train(ToyModel model, std::span<const TokenSequence> corpus, std::span<const TrainingExample> examples,
                  const TrainConfig& config);

std::string serialize(const ToyModel& model);
ToyModel deserialize_toy_model(std::string_view bytes);
void save(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_toy_model(const std::filesystem::path& path);

}  // namespace impact
