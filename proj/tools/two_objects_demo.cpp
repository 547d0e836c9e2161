// Two predictors with the same pixel error on a two-object mask: one misses
// the small object, the other trims the large one. MAE ties them; SI-MAE and
// SI-F prefer the one that finds both objects.

#include <cstdio>
#include <vector>

#include "sieva/sieva.hpp"

int main() {
  // 4x8 mask: a single pixel at (0,0) and a 2x2 block in the lower right.
  const sieva::Shape shape{4, 8};
  std::vector<std::uint8_t> gt_bits(shape.size(), 0);
  for (auto i : {0, 22, 23, 30, 31}) gt_bits[i] = 1;
  const sieva::BinaryMask gt(shape, gt_bits);

  std::vector<double> a(gt_bits.begin(), gt_bits.end()), b = a;
  a[0] = 0.0;   // misses the small object
  b[22] = 0.0;  // loses one pixel of the large one

  const auto part = sieva::build_partition(gt, sieva::Strategy::Boundings);
  for (const auto& [name, values] : {std::pair{"A", a}, std::pair{"B", b}}) {
    const sieva::SaliencyMap pred(shape, values);
    const auto sif = sieva::si_f(pred, gt, part);
    std::printf("%s  MAE %.6f  SI-MAE %.6f  Fb-mean %.4f  SI-Fb-mean %.4f\n", name,
                sieva::mae(pred, gt), sieva::si_mae(pred, gt, part),
                sieva::f_beta(pred, gt).mean, sif ? sif->mean : 0.0);
  }
}
