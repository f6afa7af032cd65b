"""Lower bounds on pi(0 | x) over symmetric unimodal slabs, with the minimizing width."""
from renyi.paradox import lindley_posterior_flat, p_value, unimodal_lower_bound


def main():
    print("x      p_value  lower_bound  K_at_minimum  flat_posterior")
    for x in (1.0, 1.645, 1.96, 2.576, 3.291):
        lb = unimodal_lower_bound(x)
        print(f"{x:5.3f}  {p_value(x):7.4f}  {lb.value:11.4f}  {lb.k:12.4f}  "
              f"{lindley_posterior_flat(x):14.4f}")


if __name__ == "__main__":
    main()
