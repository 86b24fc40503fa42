#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "splinet/linalg.hpp"

namespace splinet {

// Feed-forward ReLU network
//   f(x) = W_{L+1} s_{v_L}( ... W_2 s_{v_1}(W_1 x) ... ),
// where s_v(y)_i = max(y_i - v_i, 0).  L counts hidden layers; the output
// layer is affine-free (no shift).  Widths are (p_0, ..., p_{L+1}).
struct Layer {
    Matrix w;
    std::vector<double> v; // empty for the output layer
};

class ReluNetwork {
public:
    ReluNetwork() = default;
    // Takes ownership of layers; validates all dimensions against widths.
    ReluNetwork(std::vector<std::size_t> widths, std::vector<Layer> layers);

    std::size_t depth() const { return layers_.size() - 1; }
    std::size_t input_dim() const { return widths_.front(); }
    std::size_t output_dim() const { return widths_.back(); }
    const std::vector<std::size_t>& widths() const { return widths_; }
    const Layer& layer(std::size_t l) const { return layers_[l]; }
    std::size_t layer_count() const { return layers_.size(); }

    // Number of nonzero weights plus nonzero shifts.
    std::size_t sparsity() const;
    double max_abs_param() const;

    void eval(const double* x, double* out) const;
    // Same, with caller-provided scratch (batch loops avoid reallocation).
    void eval(const double* x, double* out, std::vector<double>& a, std::vector<double>& b) const;
    std::vector<double> eval(const std::vector<double>& x) const;
    // Convenience for scalar-output nets.
    double eval1(const std::vector<double>& x) const;

private:
    std::vector<std::size_t> widths_;
    std::vector<Layer> layers_;
};

// Incremental construction: hidden layers in order, then the output layer.
class NetBuilder {
public:
    explicit NetBuilder(std::size_t input_dim);
    std::size_t width() const { return cur_width_; }
    std::size_t hidden_count() const { return hidden_.size(); }
    void add_hidden(Matrix w, std::vector<double> v);
    // Identity pass-through on all current channels (requires nonnegative
    // channel values to be exact).
    void add_identity_layer();
    ReluNetwork finish(Matrix w_out);

private:
    std::size_t input_dim_, cur_width_;
    std::vector<Layer> hidden_;
};

// Depth padding scheme for parallel_join.  `nonnegative` appends single
// weight-1 pass-through units and is exact only when the padded network's
// outputs are nonnegative on the relevant domain; `signed_pair` carries
// x = relu(x) - relu(-x) through two units and is always exact.
enum class PadMode { nonnegative, signed_pair };

// Pad a network with identity layers so its hidden depth becomes new_depth.
ReluNetwork pad_depth(const ReluNetwork& net, std::size_t new_depth, PadMode mode);

// Side-by-side join of networks sharing the input dimension: widths add,
// outputs concatenate.  Depths must match unless equalize_depth, in which
// case shorter nets are padded (mode as above).
ReluNetwork parallel_join(const std::vector<ReluNetwork>& nets, bool equalize_depth,
                          PadMode mode = PadMode::nonnegative);

// outer(inner(x)): merges the boundary affine maps into one hidden layer.
ReluNetwork compose(const ReluNetwork& inner, const ReluNetwork& outer);

// Class description F(L, p, s) with sup bound F.
struct Architecture {
    std::size_t depth = 0;
    std::vector<std::size_t> widths;
    std::size_t sparsity_budget = 0;
    double sup_bound = 1.0;
};

struct ClassReport {
    double max_abs_param = 0.0;
    bool params_ok = false;
    std::size_t sparsity = 0;
    bool sparsity_ok = false;
    double sup_on_grid = 0.0;
    bool sup_ok = false;
    bool depth_ok = false;
    bool widths_ok = false;
    bool ok() const { return params_ok && sparsity_ok && sup_ok && depth_ok && widths_ok; }
};

// Membership check against F(L, p, s) with |f| <= F sampled on a uniform
// grid of grid_resolution^d points over [0,1]^d.
ClassReport validate_class(const ReluNetwork& net, const Architecture& arch,
                           std::size_t grid_resolution);

// JSON layout: {"depth": L, "widths": [...],
//               "layers": [{"W": [[...],...], "v": [...] | null}, ...]}
// Doubles are written in shortest round-trip form, so save/load is
// bit-exact.
std::string network_to_json(const ReluNetwork& net);
ReluNetwork network_from_json(const std::string& text);
void save_network(const ReluNetwork& net, const std::string& path);
ReluNetwork load_network(const std::string& path);

} // namespace splinet
