#include "casrnn/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "casrnn/errors.hpp"

namespace casrnn {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw ArgumentError("ConfusionMatrix: need at least one class");
}

std::uint64_t ConfusionMatrix::at(std::size_t true_cls, std::size_t predicted_cls) const {
    if (true_cls < 1 || true_cls > classes_ || predicted_cls < 1 || predicted_cls > classes_) {
        throw ArgumentError("ConfusionMatrix: class out of range 1.." +
                            std::to_string(classes_));
    }
    return counts_[(true_cls - 1) * classes_ + (predicted_cls - 1)];
}

void ConfusionMatrix::accumulate(std::size_t true_cls, std::size_t predicted_cls) {
    if (true_cls < 1 || true_cls > classes_ || predicted_cls < 1 || predicted_cls > classes_) {
        throw ArgumentError("ConfusionMatrix: class out of range 1.." +
                            std::to_string(classes_));
    }
    ++counts_[(true_cls - 1) * classes_ + (predicted_cls - 1)];
    ++total_;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) {
        throw ArgumentError("ConfusionMatrix::merge: class counts differ");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

MetricsSummary summarize(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw StateError("summarize: empty confusion matrix");
    const std::size_t c = cm.classes();
    const double total = static_cast<double>(cm.total());

    MetricsSummary s;
    s.per_class.assign(c, std::nullopt);
    std::uint64_t trace = 0;
    double chance = 0.0;
    double class_acc_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t i = 1; i <= c; ++i) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t j = 1; j <= c; ++j) {
            row += cm.at(i, j);
            col += cm.at(j, i);
        }
        trace += cm.at(i, i);
        chance += (static_cast<double>(row) / total) * (static_cast<double>(col) / total);
        if (row > 0) {
            const double acc = static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
            s.per_class[i - 1] = acc;
            class_acc_sum += acc;
            ++defined;
        }
    }
    s.oa = static_cast<double>(trace) / total;
    s.aa = defined > 0 ? class_acc_sum / static_cast<double>(defined) : 0.0;
    if (chance >= 1.0) {
        s.kappa = s.oa == 1.0 ? 1.0 : 0.0;
    } else {
        s.kappa = (s.oa - chance) / (1.0 - chance);
    }
    return s;
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string format_metrics_text(const MetricsSummary& s) {
    std::string out;
    out += "overall accuracy:  " + fixed4(s.oa) + "\n";
    out += "average accuracy:  " + fixed4(s.aa) + "\n";
    out += "kappa coefficient: " + fixed4(s.kappa) + "\n";
    for (std::size_t i = 0; i < s.per_class.size(); ++i) {
        out += "class " + std::to_string(i + 1) + ": ";
        out += s.per_class[i] ? fixed4(*s.per_class[i]) : std::string("n/a (no test pixels)");
        out += "\n";
    }
    return out;
}

std::string format_metrics_kv(const MetricsSummary& s) {
    std::string out;
    out += "oa=" + fixed4(s.oa) + "\n";
    out += "aa=" + fixed4(s.aa) + "\n";
    out += "kappa=" + fixed4(s.kappa) + "\n";
    for (std::size_t i = 0; i < s.per_class.size(); ++i) {
        if (s.per_class[i]) {
            out += "class." + std::to_string(i + 1) + "=" + fixed4(*s.per_class[i]) + "\n";
        }
    }
    return out;
}

std::vector<Rgb> default_palette(std::size_t classes) {
    static const std::vector<Rgb> fixed = {
        {0, 0, 0},       {230, 25, 75},   {60, 180, 75},   {255, 225, 25},
        {0, 130, 200},   {245, 130, 48},  {145, 30, 180},  {70, 240, 240},
        {240, 50, 230},  {210, 245, 60},  {250, 190, 212}, {0, 128, 128},
        {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0},
        {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},
        {128, 128, 128},
    };
    std::vector<Rgb> palette;
    palette.reserve(classes + 1);
    for (std::size_t i = 0; i <= classes; ++i) {
        if (i < fixed.size()) {
            palette.push_back(fixed[i]);
        } else {
            // Deterministic fallback hues past the curated list.
            const std::uint8_t r = static_cast<std::uint8_t>(37 * i % 256);
            const std::uint8_t g = static_cast<std::uint8_t>(101 * i % 256);
            const std::uint8_t b = static_cast<std::uint8_t>(193 * i % 256);
            palette.push_back({r, g, b});
        }
    }
    return palette;
}

void render_map(const std::vector<std::uint16_t>& predictions, std::size_t rows,
                std::size_t cols, const std::vector<Rgb>& palette,
                const std::string& path) {
    if (predictions.size() != rows * cols) {
        throw ArgumentError("render_map: " + std::to_string(predictions.size()) +
                            " predictions for a " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " map");
    }
    for (std::uint16_t p : predictions) {
        if (p >= palette.size()) {
            throw ArgumentError("render_map: palette has " + std::to_string(palette.size()) +
                                " entries, class " + std::to_string(p) + " present");
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "P6\n" << cols << " " << rows << "\n255\n";
    for (std::uint16_t p : predictions) {
        const Rgb& c = palette[p];
        out.write(reinterpret_cast<const char*>(c.data()), 3);
    }
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace casrnn
