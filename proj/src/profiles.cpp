#include "ecsim/devicemodel.hpp"

namespace ecsim {

namespace {

// Solves gamma * ln(1 + 5000 / gamma) = 4544: 15k pps sent to the Pi's open
// ports arrive as ~14544 pps with a 10k pps linear region.
constexpr double kReceptionGamma = 24130.885425953165;

void set_ceilings(DeviceProfile& p, double tcp, double udp, double icmp) {
  for (PayloadClass c : {PayloadClass::NoPayload, PayloadClass::HighPayload}) {
    p.e_max[{Protocol::TcpSyn, c}] = tcp;
    p.e_max[{Protocol::Udp, c}] = udp;
    p.e_max[{Protocol::IcmpEcho, c}] = icmp;
  }
}

DeviceProfile make_raspberry_pi() {
  DeviceProfile p;
  p.name = "raspberry_pi";
  p.device_class = DeviceClass::RaspberryPi;

  // TCP: 3 open, 998 open|filtered, 65389 filtered, 0 closed.
  for (std::uint32_t port : {22u, 80u, 1883u}) p.ports.set(Transport::Tcp, port, PortState::Open);
  p.ports.fill(Transport::Tcp, 1, 998, PortState::OpenFiltered);
  p.ports.fill(Transport::Tcp, 1, 65389, PortState::Filtered);
  // UDP: 4 open, 700 open|filtered.
  for (std::uint32_t port : {53u, 67u, 123u, 5353u}) {
    p.ports.set(Transport::Udp, port, PortState::Open);
  }
  p.ports.fill(Transport::Udp, 1, 700, PortState::OpenFiltered);

  p.e_base = {1.410, 1.420};
  set_ceilings(p, 3.3, 3.5, 3.6);
  p.ar_threshold_np = 20'000;
  p.ar_threshold_hp = std::nullopt;
  p.sd_ref_min[{Protocol::IcmpEcho, PayloadClass::NoPayload}] = 7.58;
  p.sd_ref_min[{Protocol::TcpSyn, PayloadClass::NoPayload}] = 6.2;
  p.sd_ref_min[{Protocol::Udp, PayloadClass::NoPayload}] = 7.8;
  for (Protocol proto : {Protocol::IcmpEcho, Protocol::TcpSyn, Protocol::Udp}) {
    p.sd_ref_min[{proto, PayloadClass::HighPayload}] = std::nullopt;
  }
  p.reception_linear_limit = 10'000.0;
  p.reception_gamma = kReceptionGamma;
  p.fap_connect_range = {3.0, 5.0};
  p.fap_e_level = 4.00;
  p.fap_e_max = 4.30;
  p.fap_attach_success = 1.0;
  p.supply_voltage = 5.0;
  p.threshold_search = {500, 20'000};
  return p;
}

DeviceProfile make_arduino() {
  DeviceProfile p;
  p.name = "arduino";
  p.device_class = DeviceClass::Arduino;

  // TCP: 1 open, 22 filtered, 1000 open|filtered, 0 closed. UDP: 1000 open|filtered.
  p.ports.set(Transport::Tcp, 80, PortState::Open);
  p.ports.fill(Transport::Tcp, 1, 22, PortState::Filtered);
  p.ports.fill(Transport::Tcp, 1, 1000, PortState::OpenFiltered);
  p.ports.fill(Transport::Udp, 1, 1000, PortState::OpenFiltered);

  p.e_base = {1.060, 1.065};
  set_ceilings(p, 1.75, 1.50, 1.25);
  p.ar_threshold_np = 800;
  p.ar_threshold_hp = 200;
  p.sd_ref_min[{Protocol::IcmpEcho, PayloadClass::NoPayload}] = 3.6;
  p.sd_ref_min[{Protocol::TcpSyn, PayloadClass::NoPayload}] = 3.3;
  p.sd_ref_min[{Protocol::Udp, PayloadClass::NoPayload}] = 3.8;
  p.sd_ref_min[{Protocol::IcmpEcho, PayloadClass::HighPayload}] = 3.13;
  p.sd_ref_min[{Protocol::TcpSyn, PayloadClass::HighPayload}] = 2.44;
  p.sd_ref_min[{Protocol::Udp, PayloadClass::HighPayload}] = 2.44;
  p.reception_linear_limit = 500.0;
  p.reception_gamma = kReceptionGamma;
  p.fap_connect_range = {7.0, 10.0};
  p.fap_e_level = 2.00;
  p.fap_e_max = 2.15;
  p.fap_attach_success = 0.8;
  p.supply_voltage = 5.0;
  p.threshold_search = {100, 800};
  return p;
}

}  // namespace

std::vector<std::string> builtin_profile_names() { return {"raspberry_pi", "arduino"}; }

std::shared_ptr<const DeviceProfile> builtin_profile(std::string_view name) {
  static const auto pi = std::make_shared<const DeviceProfile>(make_raspberry_pi());
  static const auto arduino = std::make_shared<const DeviceProfile>(make_arduino());
  if (name == "raspberry_pi") return pi;
  if (name == "arduino") return arduino;
  throw Error("unknown device profile '" + std::string(name) + "'");
}

}  // namespace ecsim
