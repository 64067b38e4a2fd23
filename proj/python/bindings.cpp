// Python bindings: analysis helpers, the protocol state machine, and the
// adversary harness.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pakemail/attack_cost.hpp"
#include "pakemail/envelope.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/harness.hpp"
#include "pakemail/keystore.hpp"
#include "pakemail/loopback.hpp"
#include "pakemail/pake.hpp"
#include "pakemail/session_manager.hpp"
#include "pakemail/trustwords.hpp"

namespace py = pybind11;
using namespace pakemail;

namespace {

ByteView view(const py::bytes& b) {
    std::string_view sv(b);
    return as_bytes(sv);
}

py::bytes pybytes(ByteView b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

py::dict cost_row(const attack::AttackParams& p) {
    auto q = attack::q_no_preimage(p);
    py::dict d;
    d["b"] = p.b;
    d["r"] = p.r;
    d["u"] = p.u;
    d["ell"] = p.ell();
    d["t"] = p.t();
    d["p"] = p.p;
    d["usable_preimages"] = q.complement_numerator().str();
    d["q"] = q.value().convert_to<double>();
    d["one_minus_q"] = q.complement().convert_to<double>();
    if (p.t() > 0) {
        auto e = attack::effort(p);
        d["effort"] = e.attempts.convert_to<double>();
        d["log2_effort"] = e.log2_attempts;
    } else {
        d["effort"] = py::none();
        d["log2_effort"] = py::none();
    }
    return d;
}

const Group& group_named(const std::string& name) { return group_by_name(name); }

// Whole exchange between two in-memory clients over loopback.
py::dict loopback_handshake(const std::string& pw_a, const std::string& pw_b, const std::string& group,
                            const std::string& binding) {
    LoopbackTransport wire;
    Keystore ka, kb;
    Identity a("alice@example.org"), b("bob@example.org");
    ka.set_self(generate_self(a));
    kb.set_self(generate_self(b));
    ManagerOptions opts;
    opts.group = &group_named(group);
    opts.mode = binding_mode_from_string(binding);
    opts.policy = AttemptPolicy{};
    if (opts.mode == BindingMode::in_secret) {
        PeerRecord ra, rb;
        ra.identity = b;
        ra.fingerprint = kb.self()->fingerprint;
        rb.identity = a;
        rb.fingerprint = ka.self()->fingerprint;
        ka.put_peer(ra);
        kb.put_peer(rb);
    }
    SessionManager ma(ka, wire, opts), mb(kb, wire, opts);
    auto ia = ma.begin(b, as_bytes(pw_a), Role::initiator);
    auto ib = mb.begin(a, as_bytes(pw_b), Role::responder);
    for (int i = 0; i < 50 && !(ma.result(ia) && mb.result(ib)); ++i) {
        mb.pump();
        ma.pump();
    }
    auto ra = ma.result(ia), rb = mb.result(ib);
    if (!ra || !rb) throw StateError("exchange did not finish");
    py::dict d;
    d["initiator"] = std::string(to_string(ra->outcome));
    d["responder"] = std::string(to_string(rb->outcome));
    d["initiator_key"] = ra->key ? py::object(pybytes(*ra->key)) : py::object(py::none());
    d["responder_key"] = rb->key ? py::object(pybytes(*rb->key)) : py::object(py::none());
    d["trustwords"] = trustwords(ka.self()->fingerprint, kb.self()->fingerprint);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fingerprint authentication with SPAKE2 and key confirmation";

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

    m.def(
        "attack_cost",
        [](unsigned b, unsigned r, unsigned u, double p) { return cost_row(attack::AttackParams::make(b, r, u, p)); },
        py::arg("b"), py::arg("r"), py::arg("u"), py::arg("p") = 0.5);
    m.def("five_word_cases", [] {
        py::list out;
        for (const auto& c : attack::five_word_cases()) {
            auto row = cost_row(c.params);
            row["label"] = c.label;
            out.append(row);
        }
        return out;
    });

    m.def(
        "trustwords",
        [](const std::string& a, const std::string& b, int count) {
            return trustwords(Fingerprint::from_hex(a), Fingerprint::from_hex(b), Wordlist::synthetic(), count);
        },
        py::arg("fpr_a"), py::arg("fpr_b"), py::arg("count") = kTrustwordsShort);
    m.def("fingerprint_of", [](const py::bytes& pk) { return fingerprint_of(view(pk)).hex(); });

    py::class_<PakeSession>(m, "PakeSession")
        .def_static(
            "start",
            [](const std::string& role, const std::string& self, const std::string& peer, const py::bytes& password,
               const std::string& group) {
                return PakeSession::start(role_from_string(role), Identity(self), Identity(peer), view(password),
                                          group_named(group));
            },
            py::arg("role"), py::arg("self_id"), py::arg("peer_id"), py::arg("password"),
            py::arg("group") = "ristretto255")
        .def_property_readonly("outbound_message", [](const PakeSession& s) { return pybytes(s.outbound_message()); })
        .def_property_readonly("phase", [](const PakeSession& s) { return std::string(to_string(s.phase())); })
        .def("finish", [](PakeSession& s, const py::bytes& inbound) { return pybytes(s.finish(view(inbound))); })
        .def(
            "confirmation_tag",
            [](PakeSession& s, const py::bytes& xid, const std::string& fa, const std::string& fb,
               const std::string& mode) {
                return pybytes(s.confirmation_tag(view(xid), Fingerprint::from_hex(fa), Fingerprint::from_hex(fb),
                                                  binding_mode_from_string(mode)));
            },
            py::arg("exchange_id"), py::arg("fpr_a"), py::arg("fpr_b"), py::arg("mode") = "confirmation")
        .def("verify_peer_tag", [](PakeSession& s, const py::bytes& tag) -> py::object {
            auto k = s.verify_peer_tag(view(tag));
            if (!k) return py::none();
            return pybytes(*k);
        });

    m.def("loopback_handshake", &loopback_handshake, py::arg("password_a"), py::arg("password_b"),
          py::arg("group") = "ristretto255", py::arg("binding") = "confirmation");

    m.def(
        "run_adversary",
        [](std::vector<std::string> dictionary, const std::string& strategy, std::size_t sessions,
           std::uint64_t seed) {
            auto s = run_adversary({std::move(dictionary), strategy_from_string(strategy), sessions, seed});
            py::dict d;
            d["sessions"] = s.sessions;
            d["adversary_successes"] = s.adversary_successes;
            d["success_rate"] = s.success_rate;
            d["expected_rate"] = s.expected_rate;
            d["sigma"] = s.sigma;
            d["min_candidates"] = s.min_candidates;
            d["history_gaps"] = s.history_gaps;
            py::dict outcomes;
            for (const auto& [o, n] : s.honest_outcomes) outcomes[py::str(std::string(to_string(o)))] = n;
            d["honest_outcomes"] = outcomes;
            return d;
        },
        py::arg("dictionary"), py::arg("strategy"), py::arg("sessions") = 1000, py::arg("seed") = 1);
}
