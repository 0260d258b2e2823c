// Copyright 2026 The qdtn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Image-to-density-matrix transform: box-filter downsampling to 2^n x 2^n,
// 2-D DFT, rearrangement of the spectrum toward conjugate symmetry, and a
// Gram-matrix normalization into an n-qubit state.

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "qdtn/linalg.hpp"
#include "qdtn/state.hpp"

namespace qdtn {

/// Row-major grayscale image with intensities in [0, 1].
struct GrayImage {
    RealMatrix pixels;  // height x width

    GrayImage() = default;
    explicit GrayImage(RealMatrix p) : pixels(std::move(p)) {}
    GrayImage(int width, int height, double fill = 0.0) : pixels(RealMatrix::Constant(height, width, fill)) {}

    int width() const { return static_cast<int>(pixels.cols()); }
    int height() const { return static_cast<int>(pixels.rows()); }
    double& at(int row, int col) { return pixels(row, col); }
    double at(int row, int col) const { return pixels(row, col); }
    bool operator==(const GrayImage&) const = default;
};

/// ITU-R BT.601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace detail {

/// M x src matrix whose row k averages source samples over [k src/M, (k+1) src/M).
inline RealMatrix box_weights(int src, int m) {
    RealMatrix w = RealMatrix::Zero(m, src);
    const double ratio = static_cast<double>(src) / m;
    for (int k = 0; k < m; ++k) {
        const double lo = k * ratio, hi = (k + 1) * ratio;
        for (int s = static_cast<int>(std::floor(lo)); s < src && s < hi; ++s) {
            const double overlap = std::min<double>(s + 1, hi) - std::max<double>(s, lo);
            if (overlap > 0) w(k, s) = overlap / ratio;
        }
    }
    return w;
}

}  // namespace detail

/// Area-weighted block average down to 2^n x 2^n.
inline GrayImage downsample(const GrayImage& img, int n) {
    if (n < 0 || n > 15) throw Error("InvalidArgument", "qubit count out of range");
    const int m = 1 << n;
    if (img.width() < m || img.height() < m)
        throw Error("SourceTooSmall", std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                          " image cannot be reduced to " + std::to_string(m) + "x" + std::to_string(m));
    if (img.width() == m && img.height() == m) return img;
    const RealMatrix rows = detail::box_weights(img.height(), m);
    const RealMatrix cols = detail::box_weights(img.width(), m);
    RealMatrix out = rows * img.pixels * cols.transpose();
    return GrayImage(out.cwiseMax(0.0).cwiseMin(1.0));
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Unnormalized 2-D DFT of a square matrix in either direction.
inline ComplexMatrix fftw_2d(const ComplexMatrix& in, int sign) {
    const auto m = in.rows();
    ComplexMatrix src = in;
    ComplexMatrix out(m, m);
    fftw_plan plan;
    {
        // Planning touches FFTW's global state; execution is thread-safe.
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(m), static_cast<int>(m), reinterpret_cast<fftw_complex*>(src.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
    }
    if (!plan) throw Error("FftFailure", "FFTW could not create a plan");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace detail

/// Standard unnormalized 2-D DFT: F[u,v] = sum_{x,y} I[x,y] exp(-2 pi i (ux + vy) / M).
inline ComplexMatrix dft2(const GrayImage& img) {
    if (img.width() != img.height() || img.width() == 0 || (img.width() & (img.width() - 1)) != 0)
        throw Error("InvalidArgument", "DFT input must be a square power-of-two image");
    // A column-major buffer of X is the row-major buffer of X^T, and the 2-D
    // DFT commutes with transposition, so Eigen storage can be passed as is.
    return detail::fftw_2d(img.pixels.cast<Complex>(), FFTW_FORWARD);
}

/// Inverse of dft2, including the 1/M^2 normalization.
inline ComplexMatrix idft2(const ComplexMatrix& spectrum) {
    const double m2 = static_cast<double>(spectrum.size());
    return detail::fftw_2d(spectrum, FFTW_BACKWARD) / m2;
}

enum class SwapKind { RealToDiagonal, SmallRealPartToDiagonal, ConjugatePair };

inline const char* to_string(SwapKind k) {
    switch (k) {
        case SwapKind::RealToDiagonal: return "real_to_diagonal";
        case SwapKind::SmallRealPartToDiagonal: return "small_real_part_to_diagonal";
        case SwapKind::ConjugatePair: return "conjugate_pair";
    }
    return "?";
}

struct MatrixIndex {
    int row = 0;
    int col = 0;
    bool operator==(const MatrixIndex&) const = default;
};

struct SwapRecord {
    MatrixIndex a;
    MatrixIndex b;
    SwapKind kind;
};

struct HermitizedMatrix {
    ComplexMatrix matrix;
    std::vector<SwapRecord> swaps;
    /// max |H - H^dagger| after rearrangement.
    double residual = 0.0;
    /// Off-diagonal entries left without a mirrored conjugate partner.
    int unpaired = 0;
};

namespace detail {

/// Every non-real entry must have a conjugate partner somewhere in the matrix.
inline void require_conjugate_closure(const ComplexMatrix& m, double tol) {
    std::vector<Complex> upper, lower;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const Complex z = m.data()[i];
        if (z.imag() > tol) upper.push_back(z);
        else if (z.imag() < -tol) lower.push_back(std::conj(z));
    }
    auto less = [](const Complex& a, const Complex& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    };
    std::sort(upper.begin(), upper.end(), less);
    std::sort(lower.begin(), lower.end(), less);
    if (upper.size() != lower.size())
        throw Error("UnpairableEntry", "spectrum has unequal numbers of upper and lower half-plane entries");
    for (std::size_t i = 0; i < upper.size(); ++i)
        if (std::abs(upper[i] - lower[i]) > tol)
            throw Error("UnpairableEntry", "entry without a conjugate partner: (" + std::to_string(upper[i].real()) +
                                               ", " + std::to_string(upper[i].imag()) + ")");
}

}  // namespace detail

/// Rearranges a real image's spectrum toward conjugate symmetry by swapping
/// entries only:
///   (i)   real off-diagonal entries trade places with complex diagonal ones,
///   (ii)  complex diagonal entries that remain trade places with the
///         off-diagonal entries of smallest |real part|,
///   (iii) a row-major scan of the upper triangle moves each entry's conjugate
///         partner into the mirrored slot.
/// A real image's spectrum has only four self-conjugate entries, so when the
/// diagonal is longer than that, some diagonal entries stay complex and their
/// partners stay unpaired; `residual` and `unpaired` report this.
inline HermitizedMatrix hermitize(const ComplexMatrix& spectrum, double tol = 1e-9) {
    const int m = static_cast<int>(spectrum.rows());
    if (spectrum.cols() != m) throw Error("DimensionMismatch", "spectrum must be square");
    detail::require_conjugate_closure(spectrum, tol);

    HermitizedMatrix out;
    out.matrix = spectrum;
    ComplexMatrix& h = out.matrix;
    auto is_real = [&](const Complex& z) { return std::abs(z.imag()) <= tol; };
    auto swap = [&](MatrixIndex a, MatrixIndex b, SwapKind kind) {
        std::swap(h(a.row, a.col), h(b.row, b.col));
        out.swaps.push_back({a, b, kind});
    };

    std::vector<int> complex_diag;
    for (int i = 0; i < m; ++i)
        if (!is_real(h(i, i))) complex_diag.push_back(i);
    std::vector<MatrixIndex> real_off;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && is_real(h(i, j))) real_off.push_back({i, j});

    // (i)
    std::vector<std::vector<bool>> touched(static_cast<std::size_t>(m), std::vector<bool>(static_cast<std::size_t>(m)));
    const std::size_t direct = std::min(complex_diag.size(), real_off.size());
    for (std::size_t t = 0; t < direct; ++t) {
        const int d = complex_diag[t];
        swap(real_off[t], {d, d}, SwapKind::RealToDiagonal);
        touched[static_cast<std::size_t>(real_off[t].row)][static_cast<std::size_t>(real_off[t].col)] = true;
    }

    // (ii)
    if (complex_diag.size() > direct) {
        std::vector<MatrixIndex> candidates;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j && !touched[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) candidates.push_back({i, j});
        std::stable_sort(candidates.begin(), candidates.end(), [&](const MatrixIndex& a, const MatrixIndex& b) {
            return std::abs(h(a.row, a.col).real()) < std::abs(h(b.row, b.col).real());
        });
        for (std::size_t t = direct, c = 0; t < complex_diag.size() && c < candidates.size(); ++t, ++c) {
            const int d = complex_diag[t];
            swap(candidates[c], {d, d}, SwapKind::SmallRealPartToDiagonal);
        }
    }

    // (iii)
    std::vector<std::vector<bool>> done(static_cast<std::size_t>(m), std::vector<bool>(static_cast<std::size_t>(m)));
    auto is_done = [&](int i, int j) { return done[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };
    auto mark = [&](int i, int j) {
        done[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
        done[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = true;
    };
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            if (is_done(i, j)) continue;
            const Complex want = std::conj(h(i, j));
            if (std::abs(h(j, i) - want) <= tol) {
                mark(i, j);
                continue;
            }
            bool found = false;
            for (int r = 0; r < m && !found; ++r) {
                for (int c = 0; c < m; ++c) {
                    if (r == c || is_done(r, c) || (r == i && c == j) || (r == j && c == i)) continue;
                    if (std::abs(h(r, c) - want) <= tol) {
                        swap({r, c}, {j, i}, SwapKind::ConjugatePair);
                        found = true;
                        break;
                    }
                }
            }
            if (found) mark(i, j);
        }
    }

    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && std::abs(h(i, j) - std::conj(h(j, i))) > tol) ++out.unpaired;
    out.residual = hermiticity_defect(h);
    return out;
}

/// Undoes the recorded swaps, recovering the original spectrum exactly.
inline ComplexMatrix unhermitize(const HermitizedMatrix& h) {
    ComplexMatrix m = h.matrix;
    for (auto it = h.swaps.rbegin(); it != h.swaps.rend(); ++it) std::swap(m(it->a.row, it->a.col), m(it->b.row, it->b.col));
    return m;
}

/// I_CCsym^dagger I_CCsym normalized to unit trace.
inline DensityMatrix to_density(const HermitizedMatrix& h) {
    const ComplexMatrix gram = h.matrix.adjoint() * h.matrix;
    const double tr = gram.trace().real();
    if (!(tr > 0.0)) throw Error("ZeroMatrix", "all-zero spectrum has no density matrix");
    ComplexMatrix rho = gram / tr;
    // The product is Hermitian in exact arithmetic; remove rounding asymmetry.
    rho = (0.5 * (rho + rho.adjoint())).eval();
    return validate_density(rho);
}

inline DensityMatrix image_to_state(const GrayImage& img, int n) {
    if (n < 1) throw Error("InvalidArgument", "image states need at least one qubit");
    return to_density(hermitize(dft2(downsample(img, n))));
}

}  // namespace qdtn
