"""Which observations make the improper-prior posteriors proper, with their masses."""
from renyi.bayes import classify_posterior
from renyi.zoo import haldane_binomial_model, poisson_process_model


def main():
    for label, model, xs in [("haldane n=10", haldane_binomial_model(10), range(11)),
                             ("poisson t=1", poisson_process_model(1.0), range(6))]:
        print(label)
        for x in xs:
            c = classify_posterior(model, x)
            print(f"  x={x:2d}  {c.verdict:8s}  mass={c.mass.value:.6g}")


if __name__ == "__main__":
    main()
