#include "splinet/relu_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace splinet {

ReluNetwork::ReluNetwork(std::vector<std::size_t> widths, std::vector<Layer> layers)
    : widths_(std::move(widths)), layers_(std::move(layers)) {
    if (widths_.size() < 2 || layers_.size() + 1 != widths_.size())
        throw std::invalid_argument("ReluNetwork: widths/layers size mismatch");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& lay = layers_[l];
        if (lay.w.rows() != widths_[l + 1] || lay.w.cols() != widths_[l])
            throw std::invalid_argument("ReluNetwork: weight shape mismatch at layer " + std::to_string(l + 1));
        const bool is_output = (l + 1 == layers_.size());
        if (is_output) {
            if (!lay.v.empty())
                throw std::invalid_argument("ReluNetwork: output layer carries no shift");
        } else if (lay.v.size() != widths_[l + 1]) {
            throw std::invalid_argument("ReluNetwork: shift size mismatch at layer " + std::to_string(l + 1));
        }
    }
}

std::size_t ReluNetwork::sparsity() const {
    std::size_t s = 0;
    for (const Layer& lay : layers_) {
        for (double w : lay.w.data())
            if (w != 0.0) ++s;
        for (double v : lay.v)
            if (v != 0.0) ++s;
    }
    return s;
}

double ReluNetwork::max_abs_param() const {
    double m = 0.0;
    for (const Layer& lay : layers_) {
        for (double w : lay.w.data()) m = std::max(m, std::fabs(w));
        for (double v : lay.v) m = std::max(m, std::fabs(v));
    }
    return m;
}

void ReluNetwork::eval(const double* x, double* out, std::vector<double>& a,
                       std::vector<double>& b) const {
    const std::size_t max_w = *std::max_element(widths_.begin(), widths_.end());
    if (a.size() < max_w) a.resize(max_w);
    if (b.size() < max_w) b.resize(max_w);
    std::copy(x, x + widths_.front(), a.begin());

    double* cur = a.data();
    double* nxt = b.data();
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        const Layer& lay = layers_[l];
        matvec(lay.w, cur, nxt);
        const std::size_t w = widths_[l + 1];
        for (std::size_t i = 0; i < w; ++i) {
            double z = nxt[i] - lay.v[i];
            nxt[i] = z > 0.0 ? z : 0.0;
        }
        std::swap(cur, nxt);
    }
    matvec(layers_.back().w, cur, out);
}

void ReluNetwork::eval(const double* x, double* out) const {
    std::vector<double> a, b;
    eval(x, out, a, b);
}

std::vector<double> ReluNetwork::eval(const std::vector<double>& x) const {
    if (x.size() != input_dim())
        throw std::invalid_argument("ReluNetwork::eval: input dimension mismatch");
    std::vector<double> out(output_dim());
    eval(x.data(), out.data());
    return out;
}

double ReluNetwork::eval1(const std::vector<double>& x) const {
    if (output_dim() != 1)
        throw std::invalid_argument("ReluNetwork::eval1: network output is not scalar");
    return eval(x)[0];
}

NetBuilder::NetBuilder(std::size_t input_dim) : input_dim_(input_dim), cur_width_(input_dim) {}

void NetBuilder::add_hidden(Matrix w, std::vector<double> v) {
    if (w.cols() != cur_width_ || w.rows() != v.size())
        throw std::invalid_argument("NetBuilder::add_hidden: shape mismatch");
    cur_width_ = w.rows();
    hidden_.push_back(Layer{std::move(w), std::move(v)});
}

void NetBuilder::add_identity_layer() {
    Matrix w(cur_width_, cur_width_);
    for (std::size_t i = 0; i < cur_width_; ++i) w(i, i) = 1.0;
    add_hidden(std::move(w), std::vector<double>(cur_width_, 0.0));
}

ReluNetwork NetBuilder::finish(Matrix w_out) {
    if (w_out.cols() != cur_width_)
        throw std::invalid_argument("NetBuilder::finish: output shape mismatch");
    std::vector<std::size_t> widths;
    widths.push_back(input_dim_);
    for (const Layer& l : hidden_) widths.push_back(l.w.rows());
    widths.push_back(w_out.rows());
    std::vector<Layer> layers = std::move(hidden_);
    layers.push_back(Layer{std::move(w_out), {}});
    return ReluNetwork(std::move(widths), std::move(layers));
}

ReluNetwork pad_depth(const ReluNetwork& net, std::size_t new_depth, PadMode mode) {
    if (new_depth < net.depth())
        throw std::invalid_argument("pad_depth: cannot shrink depth");
    if (new_depth == net.depth()) return net;

    const std::size_t extra = new_depth - net.depth();
    const std::size_t out = net.output_dim();
    NetBuilder b(net.input_dim());
    for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) {
        const Layer& lay = net.layer(l);
        b.add_hidden(lay.w, lay.v);
    }
    if (mode == PadMode::nonnegative) {
        // Old output becomes a hidden layer; exact because channel values
        // stay >= 0 through the ReLU.
        b.add_hidden(net.layer(net.depth()).w, std::vector<double>(out, 0.0));
        for (std::size_t k = 1; k < extra; ++k) b.add_identity_layer();
        Matrix w_out(out, out);
        for (std::size_t i = 0; i < out; ++i) w_out(i, i) = 1.0;
        return b.finish(std::move(w_out));
    }
    // signed_pair: carry (relu(z), relu(-z)) per channel.
    const Layer& old_out = net.layer(net.depth());
    Matrix first(2 * out, old_out.w.cols());
    for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < old_out.w.cols(); ++j) {
            first(2 * i, j) = old_out.w(i, j);
            first(2 * i + 1, j) = -old_out.w(i, j);
        }
    b.add_hidden(std::move(first), std::vector<double>(2 * out, 0.0));
    for (std::size_t k = 1; k < extra; ++k) b.add_identity_layer();
    Matrix w_out(out, 2 * out);
    for (std::size_t i = 0; i < out; ++i) {
        w_out(i, 2 * i) = 1.0;
        w_out(i, 2 * i + 1) = -1.0;
    }
    return b.finish(std::move(w_out));
}

ReluNetwork parallel_join(const std::vector<ReluNetwork>& nets, bool equalize_depth, PadMode mode) {
    if (nets.empty()) throw std::invalid_argument("parallel_join: empty network list");
    const std::size_t d = nets.front().input_dim();
    std::size_t max_depth = 0;
    for (const ReluNetwork& n : nets) {
        if (n.input_dim() != d)
            throw std::invalid_argument("parallel_join: input dimensions differ");
        max_depth = std::max(max_depth, n.depth());
    }

    std::vector<ReluNetwork> padded;
    padded.reserve(nets.size());
    for (const ReluNetwork& n : nets) {
        if (n.depth() != max_depth) {
            if (!equalize_depth)
                throw std::invalid_argument("parallel_join: depths differ and equalization is off");
            padded.push_back(pad_depth(n, max_depth, mode));
        } else {
            padded.push_back(n);
        }
    }

    NetBuilder b(d);
    for (std::size_t l = 0; l < max_depth; ++l) {
        std::size_t rows = 0, cols = 0;
        for (const ReluNetwork& n : padded) {
            rows += n.widths()[l + 1];
            cols += n.widths()[l];
        }
        if (l == 0) cols = d;
        Matrix w(rows, cols);
        std::vector<double> v(rows);
        std::size_t ro = 0, co = 0;
        for (const ReluNetwork& n : padded) {
            const Layer& lay = n.layer(l);
            for (std::size_t i = 0; i < lay.w.rows(); ++i) {
                for (std::size_t j = 0; j < lay.w.cols(); ++j)
                    w(ro + i, (l == 0 ? 0 : co) + j) = lay.w(i, j);
                v[ro + i] = lay.v[i];
            }
            ro += lay.w.rows();
            if (l != 0) co += lay.w.cols();
        }
        b.add_hidden(std::move(w), std::move(v));
    }

    std::size_t out_rows = 0, out_cols = 0;
    for (const ReluNetwork& n : padded) {
        out_rows += n.output_dim();
        out_cols += n.widths()[max_depth];
    }
    Matrix w_out(out_rows, out_cols);
    std::size_t ro = 0, co = 0;
    for (const ReluNetwork& n : padded) {
        const Layer& lay = n.layer(max_depth);
        for (std::size_t i = 0; i < lay.w.rows(); ++i)
            for (std::size_t j = 0; j < lay.w.cols(); ++j) w_out(ro + i, co + j) = lay.w(i, j);
        ro += lay.w.rows();
        co += lay.w.cols();
    }
    return b.finish(std::move(w_out));
}

ReluNetwork compose(const ReluNetwork& inner, const ReluNetwork& outer) {
    if (outer.input_dim() != inner.output_dim())
        throw std::invalid_argument("compose: interface dimensions differ");

    NetBuilder b(inner.input_dim());
    for (std::size_t l = 0; l + 1 < inner.layer_count(); ++l)
        b.add_hidden(inner.layer(l).w, inner.layer(l).v);

    // Boundary: outer's first affine map absorbs inner's output layer.
    const Matrix& wi = inner.layer(inner.depth()).w;
    const Layer& first = outer.layer(0);
    Matrix merged(first.w.rows(), wi.cols());
    for (std::size_t i = 0; i < merged.rows(); ++i)
        for (std::size_t k = 0; k < first.w.cols(); ++k) {
            const double f = first.w(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < wi.cols(); ++j) merged(i, j) += f * wi(k, j);
        }
    if (outer.depth() == 0) return b.finish(std::move(merged));

    b.add_hidden(std::move(merged), first.v);
    for (std::size_t l = 1; l + 1 < outer.layer_count(); ++l)
        b.add_hidden(outer.layer(l).w, outer.layer(l).v);
    return b.finish(outer.layer(outer.depth()).w);
}

ClassReport validate_class(const ReluNetwork& net, const Architecture& arch,
                           std::size_t grid_resolution) {
    ClassReport rep;
    rep.max_abs_param = net.max_abs_param();
    rep.params_ok = rep.max_abs_param <= 1.0;
    rep.sparsity = net.sparsity();
    rep.sparsity_ok = rep.sparsity <= arch.sparsity_budget;
    rep.depth_ok = net.depth() == arch.depth;
    rep.widths_ok = net.widths() == arch.widths;

    const std::size_t d = net.input_dim();
    if (grid_resolution < 2) throw std::invalid_argument("validate_class: grid_resolution < 2");
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (total > 100000000 / grid_resolution)
            throw std::invalid_argument("validate_class: grid too large");
        total *= grid_resolution;
    }
    std::vector<double> x(d), out(net.output_dim()), a, bbuf;
    double sup = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = static_cast<double>(rem % grid_resolution) / static_cast<double>(grid_resolution - 1);
            rem /= grid_resolution;
        }
        net.eval(x.data(), out.data(), a, bbuf);
        for (double o : out) sup = std::max(sup, std::fabs(o));
    }
    rep.sup_on_grid = sup;
    rep.sup_ok = sup <= arch.sup_bound;
    return rep;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty())
        throw std::runtime_error("network json: W must be a nonempty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j.at(0).size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = j.at(i);
        if (row.size() != cols) throw std::runtime_error("network json: ragged W");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = row.at(c).get<double>();
    }
    return m;
}

} // namespace

std::string network_to_json(const ReluNetwork& net) {
    nlohmann::json j;
    j["depth"] = net.depth();
    j["widths"] = net.widths();
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        nlohmann::json lj;
        lj["W"] = matrix_to_json(net.layer(l).w);
        if (l + 1 == net.layer_count())
            lj["v"] = nullptr;
        else
            lj["v"] = net.layer(l).v;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j.dump(2);
}

ReluNetwork network_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<std::size_t> widths = j.at("widths").get<std::vector<std::size_t>>();
    const auto& layers_json = j.at("layers");
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < layers_json.size(); ++l) {
        Layer lay;
        lay.w = matrix_from_json(layers_json.at(l).at("W"));
        const auto& vj = layers_json.at(l).at("v");
        if (!vj.is_null()) lay.v = vj.get<std::vector<double>>();
        layers.push_back(std::move(lay));
    }
    ReluNetwork net(std::move(widths), std::move(layers));
    if (j.at("depth").get<std::size_t>() != net.depth())
        throw std::runtime_error("network json: depth field disagrees with layers");
    return net;
}

void save_network(const ReluNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_network: cannot open " + path);
    out << network_to_json(net) << "\n";
}

ReluNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_network: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return network_from_json(ss.str());
}

} // namespace splinet
