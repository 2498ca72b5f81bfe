"""Solutions of ``(f(x)+g(y)+h(z))^2 = F(x)+G(y)+H(z)`` on ``x+y+z = 0``, their
residual checks, and the three-body quantum and Lax systems built from them."""
