#pragma once

// Simpson's rule with the factor s^p integrated exactly against the local
// quadratic, on the uniform grid r_i = i h. Keeps fourth order next to r = 0
// where plain Simpson loses it for non-integer or large p.

#include <array>
#include <cstddef>
#include <vector>

namespace khm::detail {

class ProductSimpson {
public:
    ProductSimpson(double h, std::size_t panels, double p);

    std::size_t panels() const { return full_.size(); }
    double h() const { return h_; }

    // out[i] = out[2 ja] + int_{r_{2 ja}}^{r_i} s^p g(s) ds for i in (2 ja, 2 jb].
    void accumulate(const std::vector<double>& g, std::vector<double>& out, std::size_t ja, std::size_t jb) const;

private:
    double h_;
    std::vector<std::array<double, 3>> full_, half_;
};

}  // namespace khm::detail
