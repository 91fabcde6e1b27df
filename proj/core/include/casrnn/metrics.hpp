#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace casrnn {

// C x C counts; counts[i][j] = test pixels of true class i+1 predicted as j+1.
// Classes are 1-based at this interface, matching ground-truth labels.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t classes);

    std::size_t classes() const { return classes_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t at(std::size_t true_cls, std::size_t predicted_cls) const;

    void accumulate(std::size_t true_cls, std::size_t predicted_cls);

    // Elementwise addition, for merging per-thread matrices.
    void merge(const ConfusionMatrix& other);

  private:
    std::size_t classes_;
    std::uint64_t total_ = 0;
    std::vector<std::uint64_t> counts_;
};

struct MetricsSummary {
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
    // per_class[i] absent when class i+1 has no test pixels; such classes are
    // excluded from AA.
    std::vector<std::optional<double>> per_class;
};

// OA = trace/total; per-class = diagonal/rowsum; AA = mean of defined
// per-class accuracies; kappa = (p_o - p_e) / (1 - p_e) with
// p_e = sum_i rowsum_i * colsum_i / total^2. Degenerate p_e == 1 reports
// kappa 1 if oa == 1 else 0.
MetricsSummary summarize(const ConfusionMatrix& cm);

// Fixed 4-decimal report, both human-readable text and key=value lines
// (oa=, aa=, kappa=, class.<i>=; absent classes omitted).
std::string format_metrics_text(const MetricsSummary& s);
std::string format_metrics_kv(const MetricsSummary& s);

using Rgb = std::array<std::uint8_t, 3>;

// Distinct colors for classes 0..classes; index 0 is black (unlabeled).
std::vector<Rgb> default_palette(std::size_t classes);

// Binary PPM (P6), one image pixel per map cell. predictions holds class
// indices 0..C row-major; palette must cover every index present.
void render_map(const std::vector<std::uint16_t>& predictions, std::size_t rows,
                std::size_t cols, const std::vector<Rgb>& palette,
                const std::string& path);

}  // namespace casrnn
