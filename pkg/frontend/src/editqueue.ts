// Serializes edit submissions: each edit is posted only after the previous
// one finished and the active scenario advanced, so a rapid double click
// yields two sequential children instead of two siblings or a lost update.

import type { ApiClient } from "./api";
import type { Edit, ScenarioMeta } from "./types";

export class EditQueue {
  private chain: Promise<unknown> = Promise.resolve();

  constructor(
    private api: ApiClient,
    private currentScenario: () => string,
    private onApplied: (child: ScenarioMeta) => Promise<void> | void,
    private onError: (err: unknown) => void = () => undefined,
  ) {}

  submit(edit: Edit): Promise<ScenarioMeta | null> {
    const next = this.chain.then(async () => {
      try {
        const child = await this.api.postEdit(this.currentScenario(), edit);
        await this.onApplied(child);
        return child;
      } catch (err) {
        this.onError(err);
        return null;
      }
    });
    this.chain = next;
    return next;
  }
}
