#pragma once

#include <chrono>
#include <cstdio>
#include <string>

#include <weylworlds/config_space.hpp>

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome curvature_identity();        // 1
Outcome variational_minimum();       // 2
Outcome stationary_balance();        // 3
Outcome free_spreading();            // 4
Outcome born_rule();                 // 5
Outcome residual_convergence();      // 6
Outcome circulation_quantization();  // 7
Outcome node_geometry();             // 8
Outcome phase_decomposition();       // 9
Outcome classical_limit();           // 10

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// printf into a std::string
template <class... Args>
std::string format(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

// Interior cells (margin from boundary and masked cells) with mu above
// floor * max(mu).
weylworlds::Mask evaluation_region(const weylworlds::ScalarField& mu, double floor,
                                   std::size_t margin, const weylworlds::Mask& avoid = {});
