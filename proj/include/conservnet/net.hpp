#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace conservnet {

// Dense feed-forward network parameters plus Adam moment buffers. Layer l maps
// width[l] -> width[l+1]; hidden layers apply Mish, the output layer is linear.
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;  // fan_in x fan_out
    std::vector<Eigen::VectorXd> biases;
    std::vector<Eigen::MatrixXd> adam_m_w, adam_v_w;
    std::vector<Eigen::VectorXd> adam_m_b, adam_v_b;
    std::int64_t step_count = 0;
    std::uint64_t seed = 0;

    int layer_count() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return static_cast<int>(weights.front().rows()); }
    std::vector<int> dims() const;
};

struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

// Pre-activations and activations recorded per layer for one batch; replaying
// the tape reproduces the forward pass exactly.
struct ForwardTape {
    Eigen::MatrixXd input;                    // M x d
    std::vector<Eigen::MatrixXd> pre_acts;    // per layer, M x width
    std::vector<Eigen::MatrixXd> activations; // per hidden layer, M x width
};

// x * tanh(softplus(x)), with the softplus saturation handled analytically
double mish(double x);
double mish_derivative(double x);
Eigen::MatrixXd mish(const Eigen::MatrixXd& x);
Eigen::MatrixXd mish_derivative(const Eigen::MatrixXd& x);

// Seed-deterministic init: weights uniform on +-sqrt(6/fan_in), biases zero.
MlpParams init_params(const std::vector<int>& dims, std::uint64_t seed);

// outputs[j] = F(batch row j); the tape is consumed by backward()
std::pair<Eigen::VectorXd, ForwardTape> forward(const MlpParams& params,
                                                const Eigen::MatrixXd& batch);

// convenience forward without tape construction overhead for evaluation
Eigen::VectorXd forward_only(const MlpParams& params, const Eigen::MatrixXd& batch);

// dL/dtheta given dL/doutput[j]; accumulates over the batch
MlpGradients backward(const MlpParams& params, const ForwardTape& tape,
                      const Eigen::VectorXd& output_grad);

void accumulate(MlpGradients& into, const MlpGradients& from);

// standard Adam with bias correction; increments step_count
void adam_step(MlpParams& params, const MlpGradients& grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// text checkpoint, hexfloat payload for bit-exact reload
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace conservnet
