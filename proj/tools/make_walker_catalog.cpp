// Writes a synthetic Walker-delta catalog as three-line TLE text.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "inac/scenario.hpp"
#include "inac/walker.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic Walker-delta TLE catalog", "make-walker-catalog"};
  inac::WalkerPattern w;
  std::string out;
  bool starlink_like = false;
  app.add_option("--planes", w.planes)->capture_default_str();
  app.add_option("--sats-per-plane", w.sats_per_plane)->capture_default_str();
  app.add_option("--phasing", w.phasing)->capture_default_str();
  app.add_option("--inclination-deg", w.inclination_deg)->capture_default_str();
  app.add_option("--altitude-m", w.altitude_m)->capture_default_str();
  app.add_option("--epoch-year", w.epoch_year)->capture_default_str();
  app.add_option("--epoch-day", w.epoch_day)->capture_default_str();
  app.add_option("--prefix", w.name_prefix)->capture_default_str();
  app.add_flag("--starlink-like", starlink_like, "Five-shell preset; ignores the single-shell options");
  app.add_option("--out", out, "Output file (stdout when omitted)");
  CLI11_PARSE(app, argc, argv);
  try {
    const std::string text = starlink_like ? inac::to_tle_text(inac::walker_catalog(inac::starlink_like_shells()))
                                           : inac::to_tle_text(inac::walker_constellation(w));
    if (out.empty()) {
      std::cout << text;
    } else {
      inac::write_text_file(out, text);
    }
  } catch (const inac::Error& e) {
    std::cerr << "make-walker-catalog: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
