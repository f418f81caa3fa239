#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bermex/mc_engine.hpp"

namespace bermex {

enum class Activation : std::uint8_t { Relu = 0, Sigmoid = 1, Identity = 2, Tanh = 3 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected network with a scalar output.
struct NetSpec {
    int input_dim = 1;
    std::vector<int> hidden{51, 51};
    Activation hidden_activation = Activation::Relu;
    Activation output_activation = Activation::Sigmoid;
    std::uint64_t init_seed = 0;

    /// {input_dim, hidden..., 1}
    std::vector<int> layer_sizes() const;
    int layers() const noexcept { return static_cast<int>(hidden.size()) + 1; }
    void validate() const;
};

/// Weights of layer l have shape (out_l x in_l); biases have length out_l.
struct NetParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    std::size_t size() const;
    NetParams zeros_like() const;
    bool all_finite() const;
    bool operator==(const NetParams& other) const;

    /// Flat copy in file order: per layer, weights row-major then biases.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
};

/// He initialisation: weights N(0, 2/fan_in), zero biases, drawn from init_seed.
NetParams init_params(const NetSpec& spec);

/// Intermediates of one forward pass; columns are samples.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;   ///< affine outputs per layer
    std::vector<Eigen::MatrixXd> post;  ///< post[0] is the input, post[l+1] the activated layer l
};

/// Outputs for a (B x input_dim) batch. Fills `cache` when given.
Eigen::VectorXd forward(const NetSpec& spec, const NetParams& params, const Eigen::Ref<const RowMatrix>& batch,
                        ForwardCache* cache = nullptr);

/// Same, on a (input_dim x B) column-per-sample matrix.
Eigen::VectorXd forward_cols(const NetSpec& spec, const NetParams& params, const Eigen::MatrixXd& inputs,
                             ForwardCache* cache = nullptr);

/// Parameter gradients of a loss whose derivative with respect to each output is `upstream`.
NetParams backward(const NetSpec& spec, const NetParams& params, const ForwardCache& cache,
                   const Eigen::VectorXd& upstream);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    NetParams m;
    NetParams v;
    std::int64_t step = 0;
    AdamConfig config;

    static AdamState for_params(const NetParams& params, AdamConfig config = {});
};

/// One bias-corrected Adam update, in place.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state);

/// Batch loss. Given the network outputs for the samples `rows`, returns the mean loss
/// and writes d(loss)/d(output) into `grad` (already sized).
using BatchLoss = std::function<double(std::span<const Eigen::Index> rows, const Eigen::VectorXd& outputs,
                                       Eigen::VectorXd& grad)>;

struct MinibatchConfig {
    int steps = 1000;
    int batch_size = 8192;
    std::uint64_t shuffle_seed = 0;
    AdamConfig adam;
    /// Geometric decay from adam.learning_rate to this rate over the steps; <= 0 keeps the rate constant.
    double final_learning_rate = 0.0;
};

/// Adam over mini-batches drawn without replacement from a permutation of the rows of
/// `inputs` that is reshuffled whenever it is exhausted. Returns the final mean batch loss.
double train_minibatch(const NetSpec& spec, NetParams& params, const Eigen::Ref<const RowMatrix>& inputs,
                       const BatchLoss& loss, const MinibatchConfig& config);

/// Forward pass in chunks of `chunk` rows to bound memory.
Eigen::VectorXd forward_chunked(const NetSpec& spec, const NetParams& params, const Eigen::Ref<const RowMatrix>& batch,
                                Eigen::Index chunk = 16384);

/// "XNNP" parameter file: magic, version u32, layer count u32, layer sizes u32, hidden and
/// output activation tags u8, then per layer the weights row-major followed by the biases.
void write_params(std::ostream& out, const NetSpec& spec, const NetParams& params);
/// Reads a file written by write_params. `spec` receives sizes and activations; its seed is left untouched.
NetParams read_params(std::istream& in, NetSpec& spec);

void save_params(const std::filesystem::path& file, const NetSpec& spec, const NetParams& params);
NetParams load_params(const std::filesystem::path& file, NetSpec& spec);

}  // namespace bermex
