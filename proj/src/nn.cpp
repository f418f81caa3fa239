#include "bermex/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "binary_io.hpp"
#include "bermex/errors.hpp"
#include "bermex/rng.hpp"

namespace bermex {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    for (auto a : {Activation::Relu, Activation::Sigmoid, Activation::Identity, Activation::Tanh}) {
        if (to_string(a) == name) return a;
    }
    throw std::invalid_argument("unknown activation '" + name + "'");
}

std::vector<int> NetSpec::layer_sizes() const {
    std::vector<int> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return sizes;
}

void NetSpec::validate() const {
    if (input_dim < 1) throw std::invalid_argument("network input dimension must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("network needs at least one hidden layer");
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("hidden layer sizes must be >= 1");
    }
}

std::size_t NetParams::size() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

NetParams NetParams::zeros_like() const {
    NetParams z;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        z.weights.push_back(Eigen::MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
        z.biases.push_back(Eigen::VectorXd::Zero(biases[l].size()));
    }
    return z;
}

bool NetParams::all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    }
    return true;
}

bool NetParams::operator==(const NetParams& other) const {
    if (weights.size() != other.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
        if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    }
    return true;
}

std::vector<double> NetParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(size());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) flat.push_back(weights[l](i, j));
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat.push_back(biases[l][i]);
    }
    return flat;
}

void NetParams::assign(std::span<const double> flat) {
    if (flat.size() != size()) throw std::invalid_argument("flat parameter vector has the wrong length");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) weights[l](i, j) = flat[k++];
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l][i] = flat[k++];
    }
}

NetParams init_params(const NetSpec& spec) {
    spec.validate();
    const auto sizes = spec.layer_sizes();
    PathRng rng(spec.init_seed, 0);
    NetParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double scale = std::sqrt(2.0 / sizes[l]);
        Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = scale * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
    }
    return p;
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

constexpr Eigen::Index kBlock = 1024;

template <typename Z, typename Y>
void activate(Activation a, const Z& z, Y&& out) {
    switch (a) {
        case Activation::Relu: out = z.cwiseMax(0.0); break;
        case Activation::Sigmoid: out = z.unaryExpr([](double v) { return sigmoid(v); }); break;
        case Activation::Identity: out = z; break;
        case Activation::Tanh: out = z.array().tanh().matrix(); break;
    }
}

// Multiplies `delta` in place by the activation derivative, given pre- and post-activation values.
template <typename Z, typename Y>
void scale_by_derivative(Activation a, const Z& z, const Y& y, Eigen::MatrixXd& delta) {
    switch (a) {
        case Activation::Relu: delta = (z.array() > 0.0).select(delta, 0.0); break;
        case Activation::Sigmoid: delta.array() *= y.array() * (1.0 - y.array()); break;
        case Activation::Identity: break;
        case Activation::Tanh: delta.array() *= 1.0 - y.array().square(); break;
    }
}

void check_shapes(const NetSpec& spec, const NetParams& params) {
    const auto sizes = spec.layer_sizes();
    if (params.weights.size() + 1 != sizes.size() || params.biases.size() + 1 != sizes.size())
        throw std::invalid_argument("parameters do not match the network layout");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (params.weights[l].rows() != sizes[l + 1] || params.weights[l].cols() != sizes[l] ||
            params.biases[l].size() != sizes[l + 1])
            throw std::invalid_argument("layer " + std::to_string(l) + " has the wrong shape");
    }
}

}  // namespace

Eigen::VectorXd forward_cols(const NetSpec& spec, const NetParams& params, const Eigen::MatrixXd& inputs,
                             ForwardCache* cache) {
    check_shapes(spec, params);
    if (inputs.rows() != spec.input_dim) throw std::invalid_argument("batch width does not match the input dimension");
    const int layers = spec.layers();
    const auto ul = static_cast<std::size_t>(layers);
    const Eigen::Index total = inputs.cols();
    const auto sizes = spec.layer_sizes();
    if (cache) {
        cache->pre.resize(ul);
        cache->post.resize(ul + 1);
        cache->post[0] = inputs;
        for (std::size_t l = 0; l < ul; ++l) {
            cache->pre[l].resize(sizes[l + 1], total);
            cache->post[l + 1].resize(sizes[l + 1], total);
        }
    }
    // Blocks of samples small enough that every intermediate stays in cache.
    std::vector<Eigen::MatrixXd> z(ul), y(ul);
    Eigen::VectorXd out(total);
    for (Eigen::Index c0 = 0; c0 < total; c0 += kBlock) {
        const Eigen::Index len = std::min(kBlock, total - c0);
        for (std::size_t l = 0; l < ul; ++l) {
            const Activation act = l + 1 == ul ? spec.output_activation : spec.hidden_activation;
            auto zl = cache ? cache->pre[l].middleCols(c0, len) : (z[l].resize(sizes[l + 1], len), z[l].middleCols(0, len));
            auto yl = cache ? cache->post[l + 1].middleCols(c0, len) : (y[l].resize(sizes[l + 1], len), y[l].middleCols(0, len));
            if (l == 0)
                zl.noalias() = params.weights[0] * inputs.middleCols(c0, len);
            else if (cache)
                zl.noalias() = params.weights[l] * cache->post[l].middleCols(c0, len);
            else
                zl.noalias() = params.weights[l] * y[l - 1];
            zl.colwise() += params.biases[l];
            activate(act, zl, yl);
        }
        out.segment(c0, len) = (cache ? cache->post[ul].middleCols(c0, len) : y[ul - 1].middleCols(0, len)).row(0).transpose();
    }
    return out;
}

Eigen::VectorXd forward(const NetSpec& spec, const NetParams& params, const Eigen::Ref<const RowMatrix>& batch,
                        ForwardCache* cache) {
    return forward_cols(spec, params, batch.transpose(), cache);
}

Eigen::VectorXd forward_chunked(const NetSpec& spec, const NetParams& params, const Eigen::Ref<const RowMatrix>& batch,
                                Eigen::Index chunk) {
    Eigen::VectorXd out(batch.rows());
    for (Eigen::Index start = 0; start < batch.rows(); start += chunk) {
        const Eigen::Index len = std::min(chunk, batch.rows() - start);
        out.segment(start, len) = forward_cols(spec, params, batch.middleRows(start, len).transpose());
    }
    return out;
}

NetParams backward(const NetSpec& spec, const NetParams& params, const ForwardCache& cache,
                   const Eigen::VectorXd& upstream) {
    const int layers = spec.layers();
    const auto ul = static_cast<std::size_t>(layers);
    if (cache.pre.size() != ul || cache.post.size() != ul + 1)
        throw std::invalid_argument("forward cache does not match the network");
    const Eigen::Index total = cache.pre.back().cols();
    if (upstream.size() != total) throw std::invalid_argument("upstream gradient has the wrong length");
    NetParams g = params.zeros_like();
    Eigen::MatrixXd delta, prev;
    for (Eigen::Index c0 = 0; c0 < total; c0 += kBlock) {
        const Eigen::Index len = std::min(kBlock, total - c0);
        delta = upstream.segment(c0, len).transpose();
        for (int l = layers - 1; l >= 0; --l) {
            const auto u = static_cast<std::size_t>(l);
            const Activation act = l + 1 == layers ? spec.output_activation : spec.hidden_activation;
            scale_by_derivative(act, cache.pre[u].middleCols(c0, len), cache.post[u + 1].middleCols(c0, len), delta);
            g.weights[u].noalias() += delta * cache.post[u].middleCols(c0, len).transpose();
            g.biases[u] += delta.rowwise().sum();
            if (l > 0) {
                prev.noalias() = params.weights[u].transpose() * delta;
                std::swap(delta, prev);
            }
        }
    }
    return g;
}

AdamState AdamState::for_params(const NetParams& params, AdamConfig config) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    s.config = config;
    return s;
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state) {
    if (state.m.weights.size() != params.weights.size()) state = AdamState::for_params(params, state.config);
    ++state.step;
    const auto& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
        m.array() = c.beta1 * m.array() + (1.0 - c.beta1) * g.array();
        v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square();
        theta.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        update(params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]);
        update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]);
    }
}

double train_minibatch(const NetSpec& spec, NetParams& params, const Eigen::Ref<const RowMatrix>& inputs,
                       const BatchLoss& loss, const MinibatchConfig& config) {
    check_shapes(spec, params);
    if (inputs.cols() != spec.input_dim) throw std::invalid_argument("training inputs do not match the input dimension");
    const Eigen::Index rows = inputs.rows();
    if (rows < 1) throw std::invalid_argument("no training samples");
    if (config.steps < 1 || config.batch_size < 1) throw std::invalid_argument("steps and batch size must be >= 1");

    const Eigen::Index batch = std::min<Eigen::Index>(config.batch_size, rows);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Philox4x32 shuffle_rng(config.shuffle_seed, 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    AdamState state = AdamState::for_params(params, config.adam);
    Eigen::MatrixXd x(spec.input_dim, batch);
    Eigen::VectorXd grad(batch);
    ForwardCache cache;
    std::size_t cursor = 0;
    double last = 0.0;
    const double lr0 = config.adam.learning_rate;
    const double decay = config.final_learning_rate > 0.0 && config.steps > 1
                             ? std::pow(config.final_learning_rate / lr0, 1.0 / (config.steps - 1))
                             : 1.0;
    for (int step = 0; step < config.steps; ++step) {
        state.config.learning_rate = lr0 * std::pow(decay, step);
        if (cursor + static_cast<std::size_t>(batch) > order.size()) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            cursor = 0;
        }
        const std::span<const Eigen::Index> idx(order.data() + cursor, static_cast<std::size_t>(batch));
        cursor += static_cast<std::size_t>(batch);
        for (Eigen::Index j = 0; j < batch; ++j) x.col(j) = inputs.row(idx[static_cast<std::size_t>(j)]).transpose();
        const Eigen::VectorXd out = forward_cols(spec, params, x, &cache);
        last = loss(idx, out, grad);
        adam_step(params, backward(spec, params, cache, grad), state);
    }
    if (!params.all_finite()) throw NumericError("network training produced non-finite parameters");
    return last;
}

namespace {
constexpr std::uint32_t kParamsVersion = 1;
}

void write_params(std::ostream& out, const NetSpec& spec, const NetParams& params) {
    check_shapes(spec, params);
    const auto sizes = spec.layer_sizes();
    out.write("XNNP", 4);
    detail::put<std::uint32_t>(out, kParamsVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.layers()));
    for (int s : sizes) detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
    detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(spec.hidden_activation));
    detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(spec.output_activation));
    const auto flat = params.flatten();
    detail::put_doubles(out, flat.data(), flat.size());
    if (!out) throw std::runtime_error("failed to write network parameters");
}

NetParams read_params(std::istream& in, NetSpec& spec) {
    detail::expect_magic(in, "XNNP");
    const auto version = detail::get<std::uint32_t>(in);
    if (version != kParamsVersion) throw std::runtime_error("unsupported XNNP version " + std::to_string(version));
    const auto layers = detail::get<std::uint32_t>(in);
    if (layers < 2 || layers > 64) throw std::runtime_error("implausible layer count in XNNP file");
    std::vector<int> sizes(layers + 1);
    for (auto& s : sizes) s = static_cast<int>(detail::get<std::uint32_t>(in));
    const auto hidden_act = detail::get<std::uint8_t>(in);
    const auto out_act = detail::get<std::uint8_t>(in);
    if (hidden_act > 3 || out_act > 3) throw std::runtime_error("unknown activation tag in XNNP file");
    if (sizes.back() != 1) throw std::runtime_error("XNNP network must have a scalar output");
    spec.input_dim = sizes.front();
    spec.hidden.assign(sizes.begin() + 1, sizes.end() - 1);
    spec.hidden_activation = static_cast<Activation>(hidden_act);
    spec.output_activation = static_cast<Activation>(out_act);
    spec.validate();
    NetParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        p.weights.emplace_back(sizes[l + 1], sizes[l]);
        p.biases.emplace_back(sizes[l + 1]);
    }
    std::vector<double> flat(p.size());
    detail::get_doubles(in, flat.data(), flat.size());
    p.assign(flat);
    return p;
}

void save_params(const std::filesystem::path& file, const NetSpec& spec, const NetParams& params) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string());
    write_params(out, spec, params);
}

NetParams load_params(const std::filesystem::path& file, NetSpec& spec) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    return read_params(in, spec);
}

}  // namespace bermex
