#include "lcvi/random.hpp"

#include <boost/random/normal_distribution.hpp>

namespace lcvi {

double RandomStream::normal() {
  return boost::random::normal_distribution<double>()(*this);
}

NoiseDraw draw_noise(RandomStream& stream, std::size_t dim) {
  NoiseDraw draw;
  draw.values.resize(dim);
  fill_normal(stream, draw.values);
  return draw;
}

void fill_normal(RandomStream& stream, std::span<double> out) {
  for (double& v : out) v = stream.normal();
}

}  // namespace lcvi
