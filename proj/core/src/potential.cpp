#include "pushedfront/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pushedfront/errors.hpp"

namespace pushedfront {

Potential Potential::zero() {
  Potential p;
  p.kind_ = Kind::Zero;
  p.label_ = "zero";
  p.finalize();
  return p;
}

Potential Potential::step(double height, double right) {
  if (!(height >= 0.0) || !std::isfinite(height))
    throw ConfigError("step potential needs a finite non-negative height");
  if (!(right > 0.0 && right <= 1.0)) throw ConfigError("step support must lie in (0, 1]");
  Potential p;
  p.kind_ = height == 0.0 ? Kind::Zero : Kind::Step;
  p.step_height_ = height;
  p.support_right_ = height == 0.0 ? 0.0 : right;
  std::ostringstream os;
  os << "step:" << height;
  p.label_ = os.str();
  p.finalize();
  return p;
}

Potential Potential::smooth(std::function<double(double)> w, double support_right,
                            std::string label) {
  if (!(support_right > 0.0 && support_right <= 1.0))
    throw ConfigError("smooth potential support must lie in (0, 1]");
  Potential p;
  p.kind_ = Kind::Smooth;
  p.support_right_ = support_right;
  p.fn_ = std::make_shared<const std::function<double(double)>>(std::move(w));
  p.label_ = std::move(label);
  p.finalize();
  return p;
}

Potential Potential::table(std::vector<double> x, std::vector<double> w) {
  if (x.size() != w.size() || x.size() < 2)
    throw ConfigError("potential table needs at least two (x, W) rows");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(w[i])) throw ConfigError("non-finite table entry");
    if (w[i] < 0.0) throw ConfigError("potential table has negative W");
    if (x[i] < 0.0 || x[i] > 1.0) throw ConfigError("potential table abscissae must lie in [0, 1]");
    if (i > 0 && !(x[i] > x[i - 1])) throw ConfigError("potential table abscissae must increase");
  }
  Potential p;
  p.kind_ = Kind::Table;
  p.knots_x_ = std::move(x);
  p.knots_w_ = std::move(w);
  p.support_right_ = p.knots_x_.back();
  p.label_ = "table";
  p.finalize();
  return p;
}

Potential Potential::load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open potential table: " + path);
  std::vector<double> xs, ws;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x, w;
    if (row >> x >> w) {
      xs.push_back(x);
      ws.push_back(w);
    }
  }
  auto p = table(std::move(xs), std::move(ws));
  p.label_ = "table:" + path;
  return p;
}

Potential Potential::parse(const std::string& text) {
  if (text == "zero") return zero();
  auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("unknown potential: " + text);
  const std::string head = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (head == "table") return load_table(arg);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(arg, &used);
    if (used != arg.size()) throw std::invalid_argument(arg);
  } catch (const std::exception&) {
    throw ConfigError("bad potential parameter: " + text);
  }
  if (head == "step") return step(value);
  if (head == "bump") {
    if (value < 0.0) throw ConfigError("bump amplitude must be non-negative");
    return smooth(
        [value](double x) {
          const double s = std::sin(std::numbers::pi * x);
          return value * s * s;
        },
        1.0, text);
  }
  throw ConfigError("unknown potential: " + text);
}

Potential Potential::scaled(double factor) const {
  if (!(factor >= 0.0)) throw ConfigError("potential scale factor must be non-negative");
  Potential p = *this;
  switch (kind_) {
    case Kind::Zero:
      break;
    case Kind::Step:
      p.step_height_ *= factor;
      break;
    case Kind::Table:
      for (auto& w : p.knots_w_) w *= factor;
      break;
    case Kind::Smooth:
      p.scale_ *= factor;
      break;
  }
  std::ostringstream os;
  os << factor << "*" << label_;
  p.label_ = os.str();
  p.finalize();
  return p;
}

double Potential::W(double x) const {
  if (x < 0.0 || x > support_right_) return 0.0;
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Step:
      return step_height_;
    case Kind::Smooth:
      return scale_ * (*fn_)(x);
    case Kind::Table: {
      auto it = std::upper_bound(knots_x_.begin(), knots_x_.end(), x);
      if (it == knots_x_.begin()) return knots_w_.front();
      if (it == knots_x_.end()) return knots_w_.back();
      const std::size_t i = static_cast<std::size_t>(it - knots_x_.begin());
      const double f = (x - knots_x_[i - 1]) / (knots_x_[i] - knots_x_[i - 1]);
      return knots_w_[i - 1] + f * (knots_w_[i] - knots_w_[i - 1]);
    }
  }
  return 0.0;
}

double Potential::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  const double lo = std::max(a, 0.0);
  const double hi = std::min(b, support_right_);
  if (hi <= lo) return 0.0;
  if (kind_ == Kind::Step) return step_height_ * (hi - lo);
  double total = 0.0;
  for (const auto& piece : pieces_) {
    const double pa = std::max(lo, piece.left), pb = std::min(hi, piece.right);
    if (pb <= pa) continue;
    if (piece.constant) {
      total += piece.value * (pb - pa);
    } else if (kind_ == Kind::Table) {
      total += 0.5 * (W(pa) + W(pb)) * (pb - pa);
    } else {
      const int n = 2 * std::max(4, static_cast<int>(std::ceil((pb - pa) / 1e-3)));
      const double h = (pb - pa) / n;
      double s = W(pa) + W(pb);
      for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * W(pa + i * h);
      total += s * h / 3.0;
    }
  }
  return total;
}

void Potential::finalize() {
  pieces_.clear();
  sup_ = 0.0;
  switch (kind_) {
    case Kind::Zero:
      support_right_ = 0.0;
      break;
    case Kind::Step:
      sup_ = step_height_;
      pieces_.push_back({0.0, support_right_, true, step_height_});
      break;
    case Kind::Table:
      if (knots_x_.front() > 0.0)
        pieces_.push_back({0.0, knots_x_.front(), true, knots_w_.front()});
      for (std::size_t i = 1; i < knots_x_.size(); ++i) {
        const bool flat = knots_w_[i] == knots_w_[i - 1];
        pieces_.push_back({knots_x_[i - 1], knots_x_[i], flat, knots_w_[i - 1]});
      }
      sup_ = *std::max_element(knots_w_.begin(), knots_w_.end());
      break;
    case Kind::Smooth: {
      pieces_.push_back({0.0, support_right_, false, 0.0});
      const int n = 4000;
      for (int i = 0; i <= n; ++i) {
        const double w = W(support_right_ * i / n);
        if (!std::isfinite(w)) throw ConfigError("smooth potential is not finite on its support");
        if (w < 0.0) throw ConfigError("smooth potential takes negative values");
        sup_ = std::max(sup_, w);
      }
      break;
    }
  }
}

}  // namespace pushedfront
