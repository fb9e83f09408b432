#include "conservnet/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "conservnet/rng.hpp"

namespace conservnet {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_chain(const std::vector<int>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("layer dims must chain at least input -> output");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("layer dims must be positive");
}

}  // namespace

std::vector<int> MlpParams::dims() const {
    std::vector<int> d;
    d.push_back(static_cast<int>(weights.front().rows()));
    for (const auto& w : weights) d.push_back(static_cast<int>(w.cols()));
    return d;
}

// Stable mish built from exp/log only: softplus(x) = max(x, 0) + log(1 +
// exp(-|x|)) never overflows, and tanh(sp) for sp >= 0 is (1 - e) / (1 + e)
// with e = exp(-2 sp). Eigen vectorizes exp and log for doubles (it does not
// vectorize tanh or log1p), so the batched versions stay SIMD throughout.
double mish(double x) {
    const double sp = std::max(x, 0.0) + std::log(1.0 + std::exp(-std::abs(x)));
    const double e = std::exp(-2.0 * sp);
    return x * (1.0 - e) / (1.0 + e);
}

double mish_derivative(double x) {
    const double sp = std::max(x, 0.0) + std::log(1.0 + std::exp(-std::abs(x)));
    const double e = std::exp(-2.0 * sp);
    const double t = (1.0 - e) / (1.0 + e);
    return t + x * (1.0 - t * t) * sigmoid(x);
}

Eigen::MatrixXd mish(const Eigen::MatrixXd& x) {
    const Eigen::ArrayXXd sp =
        x.array().max(0.0) + (1.0 + (-x.array().abs()).exp()).log();
    const Eigen::ArrayXXd e = (-2.0 * sp).exp();
    return (x.array() * (1.0 - e) / (1.0 + e)).matrix();
}

Eigen::MatrixXd mish_derivative(const Eigen::MatrixXd& x) {
    const Eigen::ArrayXXd sp =
        x.array().max(0.0) + (1.0 + (-x.array().abs()).exp()).log();
    const Eigen::ArrayXXd e = (-2.0 * sp).exp();
    const Eigen::ArrayXXd t = (1.0 - e) / (1.0 + e);
    const Eigen::ArrayXXd sig = ((-x.array()).exp() + 1.0).inverse();
    return (t + x.array() * (1.0 - t.square()) * sig).matrix();
}

MlpParams init_params(const std::vector<int>& dims, std::uint64_t seed) {
    check_chain(dims);
    MlpParams p;
    p.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l], out = dims[l + 1];
        const double bound = std::sqrt(6.0 / in);
        Eigen::MatrixXd w(in, out);
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(out));
        p.adam_m_w.push_back(Eigen::MatrixXd::Zero(in, out));
        p.adam_v_w.push_back(Eigen::MatrixXd::Zero(in, out));
        p.adam_m_b.push_back(Eigen::VectorXd::Zero(out));
        p.adam_v_b.push_back(Eigen::VectorXd::Zero(out));
    }
    return p;
}

std::pair<Eigen::VectorXd, ForwardTape> forward(const MlpParams& params,
                                                const Eigen::MatrixXd& batch) {
    if (batch.cols() != params.weights.front().rows())
        throw std::invalid_argument("batch width does not match network input dimension");
    const int L = params.layer_count();
    ForwardTape tape;
    tape.input = batch;
    tape.pre_acts.resize(L);
    tape.activations.resize(L - 1);

    const Eigen::MatrixXd* act = &tape.input;
    for (int l = 0; l < L; ++l) {
        tape.pre_acts[l].noalias() = (*act) * params.weights[l];
        tape.pre_acts[l].rowwise() += params.biases[l].transpose();
        if (l + 1 < L) {
            tape.activations[l] = mish(tape.pre_acts[l]);
            act = &tape.activations[l];
        }
    }
    if (params.weights.back().cols() != 1)
        throw std::invalid_argument("network must end in a single output neuron");
    return {tape.pre_acts.back().col(0), std::move(tape)};
}

Eigen::VectorXd forward_only(const MlpParams& params, const Eigen::MatrixXd& batch) {
    if (batch.cols() != params.weights.front().rows())
        throw std::invalid_argument("batch width does not match network input dimension");
    const int L = params.layer_count();
    Eigen::MatrixXd act = batch;
    for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd z = act * params.weights[l];
        z.rowwise() += params.biases[l].transpose();
        act = (l + 1 < L) ? mish(z) : z;
    }
    return act.col(0);
}

MlpGradients backward(const MlpParams& params, const ForwardTape& tape,
                      const Eigen::VectorXd& output_grad) {
    const int L = params.layer_count();
    if (static_cast<int>(tape.pre_acts.size()) != L)
        throw std::invalid_argument("tape depth does not match parameter layer count");
    if (output_grad.size() != tape.input.rows())
        throw std::invalid_argument("output_grad length does not match tape batch size");

    MlpGradients g;
    g.weights.resize(L);
    g.biases.resize(L);

    Eigen::MatrixXd delta = output_grad;  // M x 1 at the output layer
    for (int l = L - 1; l >= 0; --l) {
        const Eigen::MatrixXd& below = (l == 0) ? tape.input : tape.activations[l - 1];
        g.weights[l].noalias() = below.transpose() * delta;
        g.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd upstream = delta * params.weights[l].transpose();
            delta = upstream.cwiseProduct(mish_derivative(tape.pre_acts[l - 1]));
        }
    }
    return g;
}

void accumulate(MlpGradients& into, const MlpGradients& from) {
    for (std::size_t l = 0; l < into.weights.size(); ++l) {
        into.weights[l] += from.weights[l];
        into.biases[l] += from.biases[l];
    }
}

void adam_step(MlpParams& params, const MlpGradients& grads, double lr,
               double beta1, double beta2, double eps) {
    for (const auto& gw : grads.weights)
        if (!gw.allFinite()) throw std::runtime_error("non-finite gradient in adam_step");
    for (const auto& gb : grads.biases)
        if (!gb.allFinite()) throw std::runtime_error("non-finite gradient in adam_step");

    params.step_count += 1;
    const double t = static_cast<double>(params.step_count);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);

    for (int l = 0; l < params.layer_count(); ++l) {
        auto& mw = params.adam_m_w[l];
        auto& vw = params.adam_v_w[l];
        mw = beta1 * mw + (1.0 - beta1) * grads.weights[l];
        vw = beta2 * vw.array().matrix() + (1.0 - beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
        params.weights[l].array() -=
            lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + eps);

        auto& mb = params.adam_m_b[l];
        auto& vb = params.adam_v_b[l];
        mb = beta1 * mb + (1.0 - beta1) * grads.biases[l];
        vb = beta2 * vb.array().matrix() + (1.0 - beta2) * grads.biases[l].cwiseProduct(grads.biases[l]);
        params.biases[l].array() -=
            lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps);
    }
}

namespace {

constexpr int kCheckpointVersion = 1;

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%a\n", m(i, j));
            out << buf;
        }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m) {
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (!std::getline(in, line)) throw std::runtime_error("truncated checkpoint");
            m(i, j) = std::strtod(line.c_str(), nullptr);
        }
}

}  // namespace

void save_checkpoint(const MlpParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "conservnet-checkpoint v" << kCheckpointVersion << '\n';
    const auto dims = params.dims();
    out << "dims";
    for (int d : dims) out << ' ' << d;
    out << '\n';
    out << "seed " << params.seed << '\n';
    out << "step_count " << params.step_count << '\n';
    for (int l = 0; l < params.layer_count(); ++l) {
        write_matrix(out, params.weights[l]);
        write_matrix(out, params.biases[l]);
        write_matrix(out, params.adam_m_w[l]);
        write_matrix(out, params.adam_v_w[l]);
        write_matrix(out, params.adam_m_b[l]);
        write_matrix(out, params.adam_v_b[l]);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

MlpParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "conservnet-checkpoint v1")
        throw std::runtime_error("unsupported checkpoint header: " + line);

    std::getline(in, line);
    std::stringstream ss(line);
    std::string tag;
    ss >> tag;
    std::vector<int> dims;
    for (int d; ss >> d;) dims.push_back(d);

    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::getline(in, line);
    std::sscanf(line.c_str(), "seed %llu", reinterpret_cast<unsigned long long*>(&seed));
    std::getline(in, line);
    std::sscanf(line.c_str(), "step_count %lld", reinterpret_cast<long long*>(&steps));

    MlpParams p = init_params(dims, seed);
    p.step_count = steps;
    Eigen::MatrixXd bias_col;
    for (int l = 0; l < p.layer_count(); ++l) {
        read_matrix(in, p.weights[l]);
        bias_col.resize(p.biases[l].size(), 1);
        read_matrix(in, bias_col); p.biases[l] = bias_col.col(0);
        read_matrix(in, p.adam_m_w[l]);
        read_matrix(in, p.adam_v_w[l]);
        bias_col.resize(p.adam_m_b[l].size(), 1);
        read_matrix(in, bias_col); p.adam_m_b[l] = bias_col.col(0);
        read_matrix(in, bias_col); p.adam_v_b[l] = bias_col.col(0);
    }
    return p;
}

}  // namespace conservnet
