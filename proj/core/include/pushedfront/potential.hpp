#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pushedfront {

// A piece of [0, support_right] on which the perturbation is either constant or smooth.
struct PotentialPiece {
  double left = 0.0;
  double right = 0.0;
  bool constant = false;
  double value = 0.0;  // meaningful only when constant
};

// Non-negative perturbation W supported in [0, 1]; branching rate r = (1 + W) / 2.
class Potential {
 public:
  enum class Kind { Zero, Step, Smooth, Table };

  static Potential zero();
  static Potential step(double height, double right = 1.0);
  static Potential smooth(std::function<double(double)> w, double support_right = 1.0,
                          std::string label = "smooth");
  // Linear interpolation through (x, W) knots on [0, 1]; W = 0 beyond the last knot.
  static Potential table(std::vector<double> x, std::vector<double> w);
  static Potential load_table(const std::string& path);
  // "zero", "step:<b>", "table:<file>" or "bump:<a>" (a sin^2(pi x) on [0, 1]).
  static Potential parse(const std::string& text);

  Potential scaled(double factor) const;

  Kind kind() const { return kind_; }
  double W(double x) const;
  double rate(double x) const { return 0.5 * (1.0 + W(x)); }
  double sup() const { return sup_; }
  double r_max() const { return 0.5 * (1.0 + sup_); }
  double support_right() const { return support_right_; }
  // Exact for step and table potentials, Simpson otherwise.
  double integral(double a, double b) const;
  const std::vector<PotentialPiece>& pieces() const { return pieces_; }
  const std::string& label() const { return label_; }

 private:
  Potential() = default;
  void finalize();

  Kind kind_ = Kind::Zero;
  double support_right_ = 0.0;
  double sup_ = 0.0;
  double step_height_ = 0.0;
  double scale_ = 1.0;
  std::vector<double> knots_x_, knots_w_;
  std::shared_ptr<const std::function<double(double)>> fn_;
  std::vector<PotentialPiece> pieces_;
  std::string label_;
};

}  // namespace pushedfront
