public class O implements Runnable { }
