/**
 * One-slot latest-wins buffer decoupling the network task from the render
 * loop: the producer overwrites freely, the consumer takes at its own pace
 * and never sees anything but the newest value.
 */
export class LatestWins<T> {
  private slot: T | undefined;

  put(value: T): void {
    this.slot = value;
  }

  /** Remove and return the newest value, or undefined when empty. */
  take(): T | undefined {
    const value = this.slot;
    this.slot = undefined;
    return value;
  }

  /** Return the newest value without consuming it. */
  peek(): T | undefined {
    return this.slot;
  }

  get isEmpty(): boolean {
    return this.slot === undefined;
  }
}
