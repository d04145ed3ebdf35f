#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "../error.hpp"
#include "tensor.hpp"

namespace voxnav::nn {

struct CosineLoss {
    double loss = 0;
    double cosine = 0;
    std::vector<double> grad;  // dL/dpred
};

/// L = 1 - cos(pred, target), with the gradient with respect to pred.
inline CosineLoss cosine_embedding_loss(const double* pred, const double* target, std::size_t n) {
    const double pp = kernels::dot(n, pred, pred);
    const double tt = kernels::dot(n, target, target);
    if (pp <= 0 || tt <= 0) throw NumericError("cosine loss on a zero-norm vector");
    const double pt = kernels::dot(n, pred, target);
    const double np = std::sqrt(pp), nt = std::sqrt(tt);
    CosineLoss out;
    out.cosine = pt / (np * nt);
    out.loss = 1.0 - out.cosine;
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.grad[i] = -(target[i] / (np * nt) - out.cosine * pred[i] / pp);
    return out;
}

inline CosineLoss cosine_embedding_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size()) throw LogicError("cosine loss on vectors of different length");
    return cosine_embedding_loss(pred.data(), target.data(), pred.size());
}

struct ContrastiveLoss {
    double loss = 0;
    double image_to_text = 0;
    double text_to_image = 0;
    Batch<double> grad_image;  // dL/d(image rows)
    Batch<double> grad_text;   // dL/d(text rows)
    double grad_log_temperature = 0;
    Batch<double> logits;      // cosine / tau
};

/// Symmetric cross-entropy over the P×P cosine-similarity matrix divided by
/// tau = exp(log_tau). Row i of `image` is matched with row i of `text`.
/// Rows are normalized here, so the gradients include the normalization.
inline ContrastiveLoss contrastive_loss(const Batch<double>& image, const Batch<double>& text, double log_tau) {
    if (image.rows == 0 || image.rows != text.rows || image.cols != text.cols)
        throw LogicError("contrastive loss needs two equally shaped, nonempty batches");
    const std::size_t P = image.rows, D = image.cols;
    auto normalize_rows = [&](const Batch<double>& x, std::vector<double>& norms) {
        Batch<double> u(x.rows, x.cols);
        norms.resize(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) {
            const double n = std::sqrt(kernels::dot(D, x.row(r), x.row(r)));
            if (!(n > 0) || !std::isfinite(n)) throw NumericError("zero-norm or non-finite projected embedding");
            norms[r] = n;
            for (std::size_t c = 0; c < D; ++c) u(r, c) = x(r, c) / n;
        }
        return u;
    };
    std::vector<double> nz, nt;
    const Batch<double> z = normalize_rows(image, nz);
    const Batch<double> t = normalize_rows(text, nt);
    const double inv_tau = std::exp(-log_tau);

    ContrastiveLoss out;
    out.logits = Batch<double>(P, P);
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) out.logits(i, j) = kernels::dot(D, z.row(i), t.row(j)) * inv_tau;
    const auto& S = out.logits;

    // dS accumulates 0.5 * [(softmax_rows - I) + (softmax_cols - I)] / P. Sums run
    // over sorted terms so that permuting the batch leaves the loss bit-identical.
    Batch<double> dS(P, P);
    auto sorted_sum = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        double acc = 0;
        for (double x : v) acc += x;
        return acc;
    };
    auto cross_entropy = [&](bool by_row) {
        std::vector<double> terms(P), exps(P);
        for (std::size_t a = 0; a < P; ++a) {
            auto at = [&](std::size_t b) { return by_row ? S(a, b) : S(b, a); };
            double m = at(0);
            for (std::size_t b = 1; b < P; ++b) m = std::max(m, at(b));
            for (std::size_t b = 0; b < P; ++b) exps[b] = std::exp(at(b) - m);
            std::vector<double> sorted = exps;
            const double lse = m + std::log(sorted_sum(sorted));
            terms[a] = lse - at(a);
            for (std::size_t b = 0; b < P; ++b) {
                const double g = 0.5 * (std::exp(at(b) - lse) - (a == b ? 1.0 : 0.0)) / static_cast<double>(P);
                (by_row ? dS(a, b) : dS(b, a)) += g;
            }
        }
        return sorted_sum(terms) / static_cast<double>(P);
    };
    out.image_to_text = cross_entropy(true);
    out.text_to_image = cross_entropy(false);
    out.loss = 0.5 * (out.image_to_text + out.text_to_image);

    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) out.grad_log_temperature -= dS(i, j) * S(i, j);

    // Gradients with respect to the unit rows, then through the normalization.
    Batch<double> dz(P, D), dt(P, D);
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
            const double g = dS(i, j) * inv_tau;
            if (g == 0) continue;
            kernels::axpy(D, g, t.row(j), dz.row(i));
            kernels::axpy(D, g, z.row(i), dt.row(j));
        }
    auto through_norm = [&](const Batch<double>& u, const Batch<double>& du, const std::vector<double>& norms) {
        Batch<double> dx(P, D);
        for (std::size_t r = 0; r < P; ++r) {
            const double proj = kernels::dot(D, u.row(r), du.row(r));
            for (std::size_t c = 0; c < D; ++c) dx(r, c) = (du(r, c) - u(r, c) * proj) / norms[r];
        }
        return dx;
    };
    out.grad_image = through_norm(z, dz, nz);
    out.grad_text = through_norm(t, dt, nt);
    return out;
}

} // namespace voxnav::nn
