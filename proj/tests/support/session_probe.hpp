#pragma once

// Builds sessions with chosen exponents so oracle scripts can recompute
// every value by hand. Test-only access to PakeSession's private ctor.

#include "pakemail/pake.hpp"

namespace pakemail::testing {

struct SessionProbe {
    /// Forced password scalar; the scalar's own encoding stands in for the
    /// password digest inside sk.
    static PakeSession forced(const Group& g, Role role, Identity self, Identity peer, const Scalar& pi,
                              const Scalar& x) {
        return PakeSession(g, role, std::move(self), std::move(peer), pi, g.encode_scalar(pi), x);
    }

    /// Real password hashing, forced ephemeral exponent.
    static PakeSession with_exponent(const Group& g, Role role, Identity self, Identity peer, ByteView password,
                                     const Scalar& x) {
        auto digest = Group::password_digest(password, password_context(g));
        Scalar pi = g.scalar_from_wide(digest);
        return PakeSession(g, role, std::move(self), std::move(peer), pi, Bytes(digest.begin(), digest.end()), x);
    }
};

}  // namespace pakemail::testing
